#pragma once

// Instance builders and brute-force oracles shared by the unit tests and the
// acceptance runner. Oracles recompute quantities from their definitions,
// independently of the library's incremental code paths.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "reusable/benchmarks.hpp"
#include "reusable/lp.hpp"
#include "reusable/model.hpp"
#include "reusable/policy.hpp"
#include "reusable/rng.hpp"

namespace fixtures {

using namespace reusable;

/// Null type (weight 1 - p) plus one type (weight p); one resource with
/// capacity c and deterministic duration d; actions {null, serve} with
/// w = a = 1.
inline Instance toy_instance(int horizon, double capacity = 1.0, int duration = 2, double p = 1.0) {
  Instance inst;
  inst.horizon = horizon;
  inst.reward_count = 1;
  inst.resources.push_back({capacity, SurvivalCurve::deterministic(duration), 1.0});
  inst.null_customer = 0;
  inst.customers.push_back({1.0 - p, {}});
  inst.customers.push_back({p, {OutcomeDistribution::zero(), OutcomeDistribution::deterministic({1.0}, {1.0})}});
  inst.actions = ExplicitActions{2, 0};
  return inst;
}

struct RandomSpec {
  int horizon = 20;
  std::size_t resources = 2;
  std::size_t rewards = 2;
  std::size_t customers = 3;  // including the null type
  std::size_t actions = 4;    // including the null action
  int max_duration = 4;
  double capacity_lo = 1.0, capacity_hi = 4.0;
  bool bernoulli = true;  // consumption in {0, amount} with a random success probability
};

inline std::vector<double> random_survival(Rng& rng, int max_duration) {
  std::vector<double> tail;
  double v = 1.0;
  const int len = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(max_duration)));
  for (int t = 0; t < len; ++t) {
    v *= 0.4 + 0.6 * uniform01(rng);
    tail.push_back(v);
  }
  return tail;
}

inline Instance random_explicit_instance(const RandomSpec& spec, Rng& rng) {
  Instance inst;
  inst.horizon = spec.horizon;
  inst.reward_count = spec.rewards;
  for (std::size_t i = 0; i < spec.resources; ++i) {
    const double c = spec.capacity_lo + (spec.capacity_hi - spec.capacity_lo) * uniform01(rng);
    inst.resources.push_back({c, SurvivalCurve(random_survival(rng, spec.max_duration)), 1.0});
  }
  inst.null_customer = 0;
  std::vector<double> w(spec.customers);
  double total = 0.0;
  for (auto& x : w) total += (x = 0.1 + uniform01(rng));
  for (std::size_t j = 0; j < spec.customers; ++j) {
    CustomerType c;
    c.arrival_weight = w[j] / total;
    if (j != 0) {
      c.outcomes.push_back(OutcomeDistribution::zero());
      for (std::size_t k = 1; k < spec.actions; ++k) {
        std::vector<double> rew(spec.rewards), con(spec.resources);
        for (auto& r : rew) r = uniform01(rng);
        for (auto& a : con) a = uniform01(rng) < 0.7 ? uniform01(rng) : 0.0;
        if (spec.bernoulli) {
          const double q = 0.2 + 0.8 * uniform01(rng);
          std::vector<double> zr(spec.rewards, 0.0), zc(spec.resources, 0.0);
          c.outcomes.push_back({{OutcomeScenario{q, rew, con}, OutcomeScenario{1.0 - q, zr, zc}}});
        } else {
          c.outcomes.push_back(OutcomeDistribution::deterministic(rew, con));
        }
      }
    }
    inst.customers.push_back(std::move(c));
  }
  // Make the weights sum to one exactly.
  double acc = 0.0;
  for (std::size_t j = 1; j < spec.customers; ++j) acc += inst.customers[j].arrival_weight;
  inst.customers[0].arrival_weight = 1.0 - acc;
  inst.actions = ExplicitActions{spec.actions, 0};
  return inst;
}

// ---------------------------------------------------------------------------
// LP oracle: enumerate every basis of the standard-form constraint set and
// keep the best feasible vertex. Variables must be bounded.

inline bool solve_square(std::vector<std::vector<double>> A, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    if (std::abs(A[piv][c]) < 1e-11) return false;
    std::swap(A[piv], A[c]);
    std::swap(b[piv], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  x.resize(n);
  for (std::size_t r = 0; r < n; ++r) x[r] = b[r] / A[r][r];
  return true;
}

struct OracleResult {
  bool feasible = false;
  double objective = -std::numeric_limits<double>::infinity();
};

inline OracleResult vertex_enumeration(const lp::LinearProgram& prog) {
  const std::size_t n = prog.variable_count();
  // Hyperplanes: every row (as equality) and every finite variable bound.
  std::vector<std::vector<double>> planes;
  std::vector<double> rhs;
  for (const auto& c : prog.constraints) {
    planes.push_back(c.coeffs);
    rhs.push_back(c.rhs);
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    planes.push_back(e);
    rhs.push_back(prog.lower_bound(j));
    if (std::isfinite(prog.upper_bound(j))) {
      planes.push_back(e);
      rhs.push_back(prog.upper_bound(j));
    }
  }
  OracleResult best;
  const std::size_t H = planes.size();
  std::vector<std::size_t> pick(n);
  for (std::size_t a = 0; a < n; ++a) pick[a] = a;
  if (n > H) return best;
  while (true) {
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    for (auto idx : pick) {
      A.push_back(planes[idx]);
      b.push_back(rhs[idx]);
    }
    std::vector<double> x;
    if (solve_square(A, b, x) && lp::max_violation(prog, x) <= 1e-9) {
      double v = 0.0;
      for (std::size_t j = 0; j < n; ++j) v += prog.objective[j] * x[j];
      best.feasible = true;
      best.objective = std::max(best.objective, v);
    }
    std::size_t pos = n;
    while (pos > 0 && pick[pos - 1] == H - n + pos - 1) --pos;
    if (pos == 0) break;
    ++pick[pos - 1];
    for (std::size_t a = pos; a < n; ++a) pick[a] = pick[a - 1] + 1;
  }
  return best;
}

inline lp::LinearProgram random_bounded_lp(Rng& rng, std::size_t n, std::size_t m) {
  lp::LinearProgram prog(n);
  for (auto& c : prog.objective) c = 2.0 * uniform01(rng) - 1.0;
  prog.lower.assign(n, 0.0);
  prog.upper.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    prog.lower[j] = uniform01(rng) < 0.3 ? -uniform01(rng) : 0.0;
    prog.upper[j] = 1.0 + 3.0 * uniform01(rng);
  }
  for (std::size_t r = 0; r < m; ++r) {
    std::vector<double> a(n);
    for (auto& v : a) v = 2.0 * uniform01(rng) - 1.0;
    const double u = uniform01(rng);
    const auto rel = u < 0.6 ? lp::Relation::LessEqual : (u < 0.9 ? lp::Relation::GreaterEqual : lp::Relation::Equal);
    const double rhs = rel == lp::Relation::LessEqual ? 2.0 * uniform01(rng) : 2.0 * uniform01(rng) - 1.5;
    prog.add_row(std::move(a), rel, rhs);
  }
  return prog;
}

// ---------------------------------------------------------------------------
// Weight oracles, straight from the closed form
//   phi_{i,s,t} = (eps gamma / c_i) (1+eps)^(delta-gamma)
//                 (1+eps)^((gamma/c_i) sum_{tau<s} a_tau Pr(D >= t-tau+1))
//                 prod_{tau=s+1..t} (1 + kappa_i Pr(D >= t-tau+1))
//   psi_{i,s} = -(eps_z / w_max) (1-eps_z)^(sum_{tau<s} w_tau / w_max)
//               (1 - eps_z lambda / (w_max (1+eps)))^(L-s)
//               / (1-eps_z)^((1-eps_z) L lambda / w_max)

inline double closed_log_phi(const ModelView& view, const StageParams& p, const std::vector<MeanOutcome>& hist,
                             std::size_t i, int s, int t) {
  const double eps = p.epsilon, g = p.gamma, c = view.capacity(i), d = view.mean_duration(i);
  const auto& surv = view.survival(i);
  const double kappa = d > 0 ? eps * g / (d * (1 + eps)) : 0.0;
  double v = std::log(eps * g / c) + (p.delta - g) * std::log(1 + eps);
  for (int tau = 1; tau < s; ++tau) v += g / c * hist[static_cast<std::size_t>(tau - 1)].consumption[i] * surv(t - tau + 1) * std::log(1 + eps);
  for (int tau = s + 1; tau <= t; ++tau) v += std::log(1 + kappa * surv(t - tau + 1));
  return v;
}

inline double closed_log_psi(const ModelView& view, const StageParams& p, const std::vector<MeanOutcome>& hist,
                             std::size_t i, int s) {
  const double w = view.w_max(), ez = p.eps_z, lam = p.lambda, L = p.length, eps = p.epsilon;
  double earned = 0.0;
  for (int tau = 1; tau < s; ++tau) earned += hist[static_cast<std::size_t>(tau - 1)].reward[i];
  return std::log(ez / w) + earned / w * std::log(1 - ez) + (L - s) * std::log(1 - ez * lam / (w * (1 + eps))) -
         (1 - ez) * L * lam / w * std::log(1 - ez);
}

/// Weighted objective of action k at step s, from closed-form weights in
/// long double without any normalization.
inline long double brute_objective(const ModelView& view, const StageParams& p, const std::vector<MeanOutcome>& hist,
                                   int s, std::size_t j, Action k, long double shift) {
  const MeanOutcome m = view.mean_outcome(j, k);
  long double v = 0.0L;
  for (std::size_t i = 0; i < view.resource_count(); ++i)
    for (int t = s; t <= p.length; ++t)
      v += static_cast<long double>(m.consumption[i]) * view.survival(i)(t - s + 1) *
           std::exp(static_cast<long double>(closed_log_phi(view, p, hist, i, s, t)) - shift);
  for (std::size_t i = 0; i < view.reward_count(); ++i)
    v -= static_cast<long double>(m.reward[i]) * std::exp(static_cast<long double>(closed_log_psi(view, p, hist, i, s)) - shift);
  return v;
}

}  // namespace fixtures

namespace fixtures {

/// Random MNL model: type 0 is the no-arrival type, the others get features
/// in [-1, 1].
inline mnl::MnlModel random_mnl_model(Rng& rng, std::size_t products, std::size_t customers, std::size_t max_size,
                                      std::size_t dim = 2) {
  std::vector<mnl::Product> prods(products);
  for (auto& p : prods) {
    p.features.resize(dim);
    for (auto& f : p.features) f = 2.0 * uniform01(rng) - 1.0;
    p.price = 0.5 + uniform01(rng);
  }
  std::vector<mnl::CustomerFeatures> cust(customers);
  for (std::size_t j = 1; j < customers; ++j) {
    cust[j].per_product.assign(products, std::vector<double>(dim));
    for (auto& b : cust[j].per_product)
      for (auto& v : b) v = 2.0 * uniform01(rng) - 1.0;
  }
  return mnl::MnlModel(dim, max_size, std::move(prods), std::move(cust));
}

/// Assortment instance around a model; capacities in [lo, hi], random
/// survival curves, weights uniform over the non-null types after `null_weight`.
inline Instance mnl_instance(mnl::MnlModel model, Rng& rng, int horizon, double lo = 1.0, double hi = 4.0,
                             double null_weight = 0.1, int max_duration = 4) {
  Instance inst;
  inst.horizon = horizon;
  inst.reward_count = model.product_count();
  inst.null_customer = 0;
  for (std::size_t i = 0; i < model.product_count(); ++i)
    inst.resources.push_back({lo + (hi - lo) * uniform01(rng), SurvivalCurve(random_survival(rng, max_duration)),
                              model.products()[i].price});
  const std::size_t J = model.customer_count();
  inst.customers.push_back({null_weight, {}});
  for (std::size_t j = 1; j < J; ++j)
    inst.customers.push_back({(1.0 - null_weight) / static_cast<double>(J - 1), {}});
  inst.actions = std::move(model);
  return inst;
}

}  // namespace fixtures
