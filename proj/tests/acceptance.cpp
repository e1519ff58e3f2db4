// Acceptance runner: one PASS/FAIL line per headline property. Exit status is
// nonzero when any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "reusable/benchmarks.hpp"
#include "reusable/experiment.hpp"
#include "reusable/logging.hpp"
#include "reusable/mnl.hpp"
#include "reusable/policy.hpp"
#include "reusable/sim.hpp"

using namespace reusable;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = out.pass && secs < limit_s;
  if (!pass) ++failures;
  std::printf("[%s] %-22s %s (%.2f s, limit %.0f s)\n", pass ? "PASS" : "FAIL", name.c_str(), out.detail.c_str(), secs,
              limit_s);
  std::fflush(stdout);
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  const double n = static_cast<double>(v.size());
  r.se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return r;
}

AlgoConfig algo_for(const Instance& inst, double eps, double lambda_ss) {
  AlgoConfig cfg;
  cfg.epsilon = eps;
  cfg.gamma = compute_gamma(inst, lambda_ss);
  cfg.dbar = dbar_for(inst, 0.0);
  return cfg;
}

/// Wraps a policy and records the mean outcome of every decision it returns.
class Recording : public Policy {
 public:
  Recording(Policy& inner, const ModelView& view) : inner_(&inner), view_(&view) {}
  std::string name() const override { return inner_->name(); }
  void begin_episode(std::uint64_t seed) override {
    means.clear();
    inner_->begin_episode(seed);
  }
  Action decide(int t, std::size_t j) override {
    const Action k = inner_->decide(t, j);
    means.push_back(view_->mean_outcome(j, k));
    return k;
  }
  void observe(const StepOutcome& s) override { inner_->observe(s); }
  std::vector<MeanOutcome> means;

 private:
  Policy* inner_;
  const ModelView* view_;
};

// ---------------------------------------------------------------------------

Outcome simplex_oracle() {
  Rng rng(20240601);
  int agree = 0, optimal = 0;
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + uniform_index(rng, 5), m = 1 + uniform_index(rng, 5);
    const auto prog = fixtures::random_bounded_lp(rng, n, m);
    const auto oracle = fixtures::vertex_enumeration(prog);
    const auto sol = lp::solve_lp(prog);
    if (!oracle.feasible) {
      agree += sol.status == lp::Status::Infeasible;
      continue;
    }
    ++optimal;
    if (sol.status != lp::Status::Optimal) continue;
    const double err = std::abs(sol.objective - oracle.objective);
    worst = std::max(worst, err);
    agree += err <= 1e-8 && lp::max_violation(prog, sol.x) <= 1e-9;
  }
  return {agree == 200, std::to_string(agree) + "/200 agree (" + std::to_string(optimal) +
                            " feasible), max |obj - oracle| = " + fmt(worst, 3) + " <= 1e-8"};
}

Outcome lemma2_sandwich() {
  Rng rng(20240602);
  int ok = 0, checks = 0;
  double worst_upper = -1e300, worst_lower = -1e300;
  for (int rep = 0; rep < 20; ++rep) {
    fixtures::RandomSpec spec;
    spec.horizon = 5 + static_cast<int>(uniform_index(rng, 26));
    spec.customers = 2 + uniform_index(rng, 3);
    spec.actions = 2 + uniform_index(rng, 3);
    spec.resources = 1 + uniform_index(rng, 2);
    spec.max_duration = std::min(spec.horizon, 6);
    const auto inst = fixtures::random_explicit_instance(spec, rng);
    const ModelView view(inst);
    const auto p = inst.arrival_weights();
    const double T = inst.horizon;
    const double lss = solve_lp_ss(view, p).lambda;
    const double le = solve_lp_e(view, p).lambda;
    const double gamma = compute_gamma(inst, lss);
    for (double delta : {0.0, 0.3}) {
      const int dbar = dbar_for(inst, delta);
      const double tol = 1e-9 * (1.0 + T * le);
      const double upper = T * lss - T * le;  // must be <= 0
      const double lower = (1.0 - delta / gamma) * (T * le - dbar * view.w_max()) - T * lss;  // must be <= 0
      worst_upper = std::max(worst_upper, upper);
      worst_lower = std::max(worst_lower, lower);
      ++checks;
      ok += upper <= tol && lower <= tol;
    }
  }
  return {ok == checks, std::to_string(ok) + "/" + std::to_string(checks) +
                            " sandwiches hold; max(T*lss - T*le) = " + fmt(worst_upper, 3) +
                            ", max(lower - T*lss) = " + fmt(worst_lower, 3)};
}

Outcome lemma1_upper_bound() {
  const auto inst = fixtures::toy_instance(64);
  const ModelView view(inst);
  const auto p = inst.arrival_weights();
  const auto x = solve_lp_ss(view, p);
  const double bound = inst.horizon * solve_lp_e(view, p).lambda;
  const auto cfg = algo_for(inst, 0.25, x.lambda);
  std::vector<std::unique_ptr<Policy>> pols;
  pols.push_back(std::make_unique<StaticPolicy>(view, x, cfg.epsilon));
  pols.push_back(std::make_unique<AdaptivePolicy>(view, cfg));
  pols.push_back(std::make_unique<HybridPolicy>(view, x, cfg, 4));
  pols.push_back(std::make_unique<RandomPolicy>(view));
  pols.push_back(std::make_unique<NullPolicy>(view));
  bool ok = true;
  std::ostringstream os;
  os << "T*lambda_e = " << fmt(bound);
  for (auto& pol : pols) {
    std::vector<double> scores;
    for (std::uint64_t seed = 1; seed <= 2000; ++seed) scores.push_back(run_episode(inst, *pol, seed).min_reward());
    const auto ms = mean_se(scores);
    const bool pass = ms.mean <= bound + 3.0 * ms.se;
    ok = ok && pass;
    os << "; " << pol->name() << " " << fmt(ms.mean, 5) << "+-" << fmt(ms.se, 2) << (pass ? "" : " (over)");
  }
  return {ok, os.str()};
}

Instance static_guarantee_instance() {
  Rng rng(20240604);
  Instance inst;
  inst.horizon = 4096;
  inst.reward_count = 2;
  for (int i = 0; i < 2; ++i) {
    std::vector<double> pmf(9);
    for (auto& w : pmf) w = uniform01(rng);
    inst.resources.push_back({200.0, SurvivalCurve::from_pmf(pmf), 1.0});
  }
  inst.null_customer = 0;
  inst.customers.push_back({0.1, {}});
  for (int j = 1; j <= 3; ++j) {
    CustomerType c;
    c.arrival_weight = 0.3;
    c.outcomes.push_back(OutcomeDistribution::zero());
    for (int k = 1; k <= 3; ++k) {
      std::vector<double> w = {uniform01(rng), uniform01(rng)};
      std::vector<double> a = {uniform01(rng), uniform01(rng)};
      const double q = 0.3 + 0.7 * uniform01(rng);
      c.outcomes.push_back({{OutcomeScenario{q, w, a}, OutcomeScenario{1.0 - q, {0.0, 0.0}, {0.0, 0.0}}}});
    }
    inst.customers.push_back(std::move(c));
  }
  inst.actions = ExplicitActions{4, 0};
  return inst;
}

Outcome static_guarantee() {
  const auto inst = static_guarantee_instance();
  if (!validate_instance(inst).empty()) return {false, "instance does not validate"};
  const ModelView view(inst);
  const auto x = solve_lp_ss(view, inst.arrival_weights());
  const double eps = 0.125;
  const double gamma = compute_gamma(inst, x.lambda);
  const double target = (1.0 - 3.0 * eps) * inst.horizon * x.lambda;
  int hits = 0;
  double worst = 1e300;
  std::size_t violations = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    StaticPolicy pol(view, x, eps);
    const auto tr = run_episode(inst, pol, seed);
    hits += tr.min_reward() >= target;
    worst = std::min(worst, tr.min_reward());
    violations += tr.capacity_violations;
  }
  const bool ok = gamma >= 200.0 && hits >= 180 && violations == 0;
  return {ok, "gamma = " + fmt(gamma) + ", dbar = " + std::to_string(dbar_for(inst, 0.0)) + ", " +
                  std::to_string(hits) + "/200 reach (1-3eps)T*lss = " + fmt(target) + " (need 180), worst " +
                  fmt(worst)};
}

Outcome adaptive_mechanics() {
  Rng rng(20240605);
  // Argmin on fuzzed states.
  int argmin_ok = 0;
  const int states = 10000;
  for (int rep = 0; rep < states; ++rep) {
    fixtures::RandomSpec spec;
    spec.actions = 2 + uniform_index(rng, 5);
    spec.customers = 2 + uniform_index(rng, 3);
    spec.resources = 1 + uniform_index(rng, 3);
    spec.rewards = 1 + uniform_index(rng, 2);
    spec.max_duration = 1 + static_cast<int>(uniform_index(rng, 6));
    const auto inst = fixtures::random_explicit_instance(spec, rng);
    const ModelView view(inst);
    StageParams p;
    p.length = 2 + static_cast<int>(uniform_index(rng, 12));
    p.epsilon = std::ldexp(1.0, -1 - static_cast<int>(uniform_index(rng, 3)));
    p.gamma = 0.5 + 4.0 * uniform01(rng);
    p.lambda = (0.05 + 0.9 * uniform01(rng)) * view.w_max();
    p.eps_z = 0.05 + 0.94 * uniform01(rng);
    p.delta = 0.2 * uniform01(rng);
    WeightState ws(view, p);
    std::vector<MeanOutcome> hist;
    const int s = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(p.length)));
    for (int u = 1; u < s; ++u) {
      const auto m = view.mean_outcome(uniform_index(rng, spec.customers), Action{uniform_index(rng, spec.actions)});
      ws.update(m);
      hist.push_back(m);
    }
    const std::size_t j = uniform_index(rng, spec.customers);
    const long double shift = ws.coefficients().log_offset;
    std::size_t best = 0;
    long double best_v = 0.0L;
    for (std::size_t k = 0; k < spec.actions; ++k) {
      const long double v = fixtures::brute_objective(view, p, hist, s, j, Action{k}, shift);
      if (k == 0 || v < best_v) {
        best_v = v;
        best = k;
      }
    }
    argmin_ok += select_action(ws, view, j) == Action{best};
  }

  // Incremental against closed form over whole stages.
  double worst_rel = 0.0;
  bool signs = true;
  for (int rep = 0; rep < 200; ++rep) {
    fixtures::RandomSpec spec;
    spec.max_duration = 8;
    const auto inst = fixtures::random_explicit_instance(spec, rng);
    const ModelView view(inst);
    StageParams p;
    p.length = 8 + static_cast<int>(uniform_index(rng, 57));
    p.epsilon = 0.125;
    p.gamma = 1.0 + 20.0 * uniform01(rng);
    p.lambda = (0.05 + 0.9 * uniform01(rng)) * view.w_max();
    p.eps_z = 0.05 + 0.94 * uniform01(rng);
    WeightState ws(view, p);
    std::vector<MeanOutcome> hist;
    for (int s = 1; s <= p.length; ++s) {
      for (std::size_t i = 0; i < view.resource_count(); ++i)
        for (int t = s; t <= p.length; ++t) {
          const double want = fixtures::closed_log_phi(view, p, hist, i, s, t);
          const double got = ws.log_phi(i, t);
          signs = signs && std::isfinite(got);
          worst_rel = std::max(worst_rel, std::abs(got - want) / std::max(1.0, std::abs(want)));
        }
      for (std::size_t i = 0; i < view.reward_count(); ++i) {
        const double want = fixtures::closed_log_psi(view, p, hist, i, s);
        worst_rel = std::max(worst_rel, std::abs(ws.log_psi(i) - want) / std::max(1.0, std::abs(want)));
        signs = signs && std::isfinite(ws.log_psi(i));  // psi = -exp(log_psi) < 0
      }
      const auto m = view.mean_outcome(uniform_index(rng, spec.customers), Action{uniform_index(rng, spec.actions)});
      ws.update(m);
      hist.push_back(m);
    }
  }

  // Hard capacity over fuzzed adaptive and hybrid episodes.
  std::size_t violations = 0, episodes = 0, forced = 0;
  for (int rep = 0; rep < 100; ++rep) {
    fixtures::RandomSpec spec;
    spec.horizon = 64;
    spec.capacity_lo = 0.5;
    spec.capacity_hi = 2.0;
    const auto inst = fixtures::random_explicit_instance(spec, rng);
    const ModelView view(inst);
    const auto x = solve_lp_ss(view, inst.arrival_weights());
    const auto cfg = algo_for(inst, 0.25, x.lambda);
    AdaptivePolicy ad(view, cfg);
    HybridPolicy hy(view, x, cfg, 3);
    for (Policy* pol : {static_cast<Policy*>(&ad), static_cast<Policy*>(&hy)}) {
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto tr = run_episode(inst, *pol, seed);
        violations += tr.capacity_violations;
        for (std::size_t i = 0; i < inst.resources.size(); ++i)
          violations += tr.peak_occupancy[i] > inst.resources[i].capacity;
        forced += tr.forced_rejections;
        ++episodes;
      }
    }
  }

  const bool ok = argmin_ok == states && worst_rel <= 1e-6 && signs && violations == 0;
  return {ok, std::to_string(argmin_ok) + "/" + std::to_string(states) + " argmins exact; max log-rel weight error " +
                  fmt(worst_rel, 3) + " <= 1e-6; phi>0, psi<0: " + (signs ? "yes" : "no") + "; " +
                  std::to_string(violations) + " capacity violations in " + std::to_string(episodes) +
                  " episodes (" + std::to_string(forced) + " forced rejections)"};
}

Outcome trend() {
  ExperimentConfig cfg;
  cfg.generator = GeneratorSpec{};
  cfg.generator_seed = 1;
  cfg.policies = {"static", "adaptive"};
  cfg.reps = 10;
  cfg.seed = 0;
  cfg.epsilon = 0.25;
  cfg.scales = {1, 2, 4};
  const auto rep = trend_report(cfg);
  std::ostringstream os;
  for (const auto& pt : rep.points) {
    os << "n=" << pt.n_scale << ":";
    for (const auto& r : pt.rows) os << ' ' << r.policy << ' ' << fmt(r.gap_pct, 4) << '%';
    os << "; ";
  }
  os << "adaptive strictly decreasing: " << (rep.adaptive_strictly_decreasing ? "yes" : "no")
     << ", static <= adaptive: " << (rep.static_within_adaptive ? "yes" : "no");
  return {rep.adaptive_strictly_decreasing && rep.static_within_adaptive, os.str()};
}

Outcome mnl_lp() {
  Rng rng(20240607);
  int ok = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t C = 1 + uniform_index(rng, 8);
    const std::size_t n = 1 + uniform_index(rng, std::min<std::size_t>(C, 5));
    const auto model = fixtures::random_mnl_model(rng, C, 2, n, 1 + uniform_index(rng, 4));
    std::vector<double> c(C);
    for (auto& v : c) v = 2.0 * uniform01(rng) - 1.2;
    ok += mnl::best_assortment(model, 1, c) == mnl::best_assortment_enumerated(model, 1, c);
  }
  return {ok == 500, std::to_string(ok) + "/500 assortments equal enumeration"};
}

Outcome potential_induction() {
  const auto inst = fixtures::toy_instance(8);
  const ModelView view(inst);
  const auto x = solve_lp_ss(view, inst.arrival_weights());
  const auto cfg = algo_for(inst, 0.25, x.lambda);
  AdaptiveOptions opts;
  opts.record = true;
  const auto sched = stage_schedule(inst.horizon, cfg.epsilon);
  const int max_len = sched.back().length;

  // Prefix of the stage with schedule index idx from a recorded episode.
  auto prefix = [&](const Recording& rec, std::size_t idx, int len) {
    const auto& st = sched[idx];
    return std::vector<MeanOutcome>(rec.means.begin() + st.offset, rec.means.begin() + st.offset + len);
  };

  bool ok = true;
  std::ostringstream os;
  int comparisons = 0;
  for (int s = 0; s < max_len; ++s) {
    HybridPolicy lo(view, x, cfg, s, opts), hi(view, x, cfg, s + 1, opts);
    Recording rlo(lo, view), rhi(hi, view);
    // Differences per stage that is long enough for step s + 1.
    std::vector<std::vector<double>> diffs(sched.size());
    for (std::uint64_t seed = 1; seed <= 10000; ++seed) {
      (void)run_episode(inst, rlo, seed);
      (void)run_episode(inst, rhi, seed);
      for (std::size_t idx = 1; idx < sched.size(); ++idx) {
        if (sched[idx].length <= s) continue;
        const auto& rec_lo = lo.adaptive().records()[idx];
        const auto& rec_hi = hi.adaptive().records()[idx];
        if (rec_lo.fallback || rec_hi.fallback) continue;
        const double f_hi = potential_F(view, rec_hi.params, prefix(rhi, idx, s + 1));
        const double f_lo = potential_F(view, rec_lo.params, prefix(rlo, idx, s));
        diffs[idx].push_back(f_hi - f_lo);
      }
    }
    for (std::size_t idx = 1; idx < sched.size(); ++idx) {
      if (diffs[idx].empty()) continue;
      const auto ms = mean_se(diffs[idx]);
      const bool pass = ms.mean <= 3.0 * ms.se;
      ok = ok && pass && diffs[idx].size() == 10000;
      ++comparisons;
      os << "r=" << sched[idx].index << ",s=" << s << ": " << fmt(ms.mean, 3) << (pass ? "" : " (FAIL)") << "; ";
    }
  }
  os << comparisons << " comparisons over 10^4 paired seeds";
  return {ok, os.str()};
}

Outcome csv_determinism() {
  ExperimentConfig cfg;
  GeneratorSpec g;
  g.horizon_per_scale = 400;
  cfg.generator = g;
  cfg.policies = {"static", "adaptive", "hybrid(10)", "random", "always-null"};
  cfg.reps = 6;
  cfg.seed = 42;
  cfg.epsilon = 0.5;
  const auto a = csv_string(run_experiment(cfg).rows);
  cfg.threads = 1;
  const auto b = csv_string(run_experiment(cfg).rows);
  return {a == b && !a.empty(), std::to_string(a.size()) + " CSV bytes, identical across runs: " +
                                    (a == b ? "yes" : "no")};
}

}  // namespace

int main() {
  log::set_level(log::Level::Quiet);
  run("simplex-oracle", 10, simplex_oracle);
  run("lp-sandwich", 60, lemma2_sandwich);
  run("lp-e-upper-bound", 60, lemma1_upper_bound);
  run("static-guarantee", 300, static_guarantee);
  run("adaptive-mechanics", 600, adaptive_mechanics);
  run("gap-trend", 600, trend);
  run("mnl-assortment-lp", 30, mnl_lp);
  run("potential-induction", 300, potential_induction);
  run("csv-determinism", 600, csv_determinism);
  std::printf("%s: %d failing\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
