#include "reusable/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "reusable/logging.hpp"

namespace reusable {

double SteadyStateSolution::value(std::size_t j, Action k) const {
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c].customer == j && columns[c].action == k) return x[c];
  return 0.0;
}

std::vector<std::pair<Action, double>> SteadyStateSolution::for_customer(std::size_t j) const {
  std::vector<std::pair<Action, double>> out;
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c].customer == j && x[c] > 0.0) out.emplace_back(columns[c].action, x[c]);
  return out;
}

namespace {

// Coefficients of one column across all rows (reward, knapsack, simplex).
std::vector<double> column_entries(const ModelView& view, std::span<const double> p, const Column& col) {
  const std::size_t R = view.reward_count(), C = view.resource_count(), J = view.customer_count();
  std::vector<double> a(R + C + J, 0.0);
  const double pj = p[col.customer];
  const MeanOutcome m = view.mean_outcome(col.customer, col.action);
  for (std::size_t i = 0; i < R; ++i) a[i] = pj * m.reward[i];
  for (std::size_t i = 0; i < C; ++i) a[R + i] = pj * m.consumption[i] * view.mean_duration(i);
  a[R + C + col.customer] = 1.0;
  return a;
}

}  // namespace

lp::LinearProgram build_lp_ss(const ModelView& view, std::span<const double> p, std::span<const Column> columns) {
  const std::size_t R = view.reward_count(), C = view.resource_count(), J = view.customer_count();
  const std::size_t n = columns.size();
  lp::LinearProgram prog(n + 1);
  prog.objective[n] = 1.0;
  std::vector<std::vector<double>> rows(R + C + J, std::vector<double>(n + 1, 0.0));
  for (std::size_t c = 0; c < n; ++c) {
    const auto a = column_entries(view, p, columns[c]);
    for (std::size_t r = 0; r < a.size(); ++r) rows[r][c] = a[r];
  }
  for (std::size_t i = 0; i < R; ++i) {
    rows[i][n] = -1.0;
    prog.add_row(std::move(rows[i]), lp::Relation::GreaterEqual, 0.0);
  }
  for (std::size_t i = 0; i < C; ++i) prog.add_row(std::move(rows[R + i]), lp::Relation::LessEqual, view.capacity(i));
  for (std::size_t j = 0; j < J; ++j) prog.add_row(std::move(rows[R + C + j]), lp::Relation::LessEqual, 1.0);
  return prog;
}

std::vector<Column> all_columns(const ModelView& view, std::size_t cap) {
  const auto actions = view.enumerate_actions(cap);
  if (actions.size() * view.customer_count() > cap)
    throw Error(ErrorCode::TooLarge, "column count exceeds cap");
  std::vector<Column> cols;
  cols.reserve(actions.size() * view.customer_count());
  for (std::size_t j = 0; j < view.customer_count(); ++j)
    for (Action a : actions) cols.push_back({j, a});
  return cols;
}

lp::LinearProgram build_lp_ss(const ModelView& view, std::span<const double> p) {
  const auto cols = all_columns(view);
  return build_lp_ss(view, p, cols);
}

namespace {

SteadyStateSolution unpack(std::vector<Column> columns, const lp::LpSolution& sol) {
  SteadyStateSolution out;
  const std::size_t n = columns.size();
  out.lambda = sol.x[n];
  out.x.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(n));
  for (double& v : out.x) v = std::max(v, 0.0);
  out.columns = std::move(columns);
  return out;
}

lp::LpSolution solve_master(const lp::LinearProgram& prog) {
  auto sol = lp::solve_lp(prog);
  // x = 0, lambda = 0 is always feasible and lambda is bounded by the rewards.
  if (sol.status != lp::Status::Optimal)
    throw Error(ErrorCode::NumericalBreakdown, std::string("steady-state LP reported ") + lp::to_string(sol.status));
  return sol;
}

}  // namespace

SteadyStateSolution solve_columns(const ModelView& view, std::span<const double> p, std::vector<Column> columns) {
  const auto prog = build_lp_ss(view, p, columns);
  return unpack(std::move(columns), solve_master(prog));
}

SteadyStateSolution colgen_solve_ss(const ModelView& view, std::span<const double> p, const PricingOracle& pricing,
                                    const ColgenOptions& opts) {
  const std::size_t R = view.reward_count(), C = view.resource_count(), J = view.customer_count();
  std::vector<Column> columns;
  std::set<std::pair<std::size_t, std::uint64_t>> seen;
  for (std::size_t j = 0; j < J; ++j) {
    columns.push_back({j, view.null_action()});
    seen.insert({j, view.null_action().code});
  }

  for (std::size_t round = 1;; ++round) {
    const auto prog = build_lp_ss(view, p, columns);
    const auto sol = solve_master(prog);
    const std::span<const double> duals(sol.duals);
    const auto reward_duals = duals.subspan(0, R);
    const auto capacity_duals = duals.subspan(R, C);

    std::size_t added = 0;
    for (std::size_t j = 0; j < J; ++j) {
      if (j == view.null_customer() || p[j] <= 0.0) continue;
      const Action k = pricing(j, reward_duals, capacity_duals);
      if (seen.count({j, k.code})) continue;
      const auto a = column_entries(view, p, {j, k});
      double rc = 0.0;
      for (std::size_t r = 0; r < a.size(); ++r) rc -= duals[r] * a[r];
      if (rc > opts.reduced_cost_tolerance) {
        columns.push_back({j, k});
        seen.insert({j, k.code});
        ++added;
      }
    }
    if (added == 0) {
      auto out = unpack(std::move(columns), sol);
      out.rounds = round;
      return out;
    }
    if (round >= opts.max_rounds) {
      auto out = unpack(std::vector<Column>(columns.begin(), columns.end() - static_cast<std::ptrdiff_t>(added)), sol);
      out.rounds = round;
      std::ostringstream os;
      os << "column generation stopped after " << round << " rounds with incumbent lambda " << out.lambda;
      throw ColgenLimit(std::move(out), os.str());
    }
  }
}

SteadyStateSolution colgen_solve_ss(const ModelView& view, std::span<const double> p, const ColgenOptions& opts) {
  if (!view.is_mnl()) throw Error(ErrorCode::InvalidInstance, "MNL pricing needs an assortment instance");
  const auto& model = view.mnl();
  PricingOracle pricing = [&](std::size_t j, std::span<const double> yr, std::span<const double> yc) {
    return Action{mnl::colgen_pricing(model, j, yr, yc, view.mean_durations())};
  };
  return colgen_solve_ss(view, p, pricing, opts);
}

SteadyStateSolution solve_lp_ss(const ModelView& view, std::span<const double> p) {
  if (view.is_mnl()) return colgen_solve_ss(view, p);
  return solve_columns(view, p, all_columns(view));
}

std::vector<double> empirical_distribution(std::span<const std::size_t> counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  std::vector<double> p(counts.size(), 0.0);
  if (total == 0) return p;
  for (std::size_t j = 0; j < counts.size(); ++j) p[j] = static_cast<double>(counts[j]) / static_cast<double>(total);
  return p;
}

std::vector<double> saa_subsample(std::span<const double> p, std::size_t samples, Rng& rng) {
  std::vector<std::size_t> counts(p.size(), 0);
  for (std::size_t s = 0; s < samples; ++s) ++counts[sample_discrete(rng, p)];
  return empirical_distribution(counts);
}

StageEstimate solve_lambda_r(const ModelView& view, std::span<const double> p_hat, double eps_x_prev) {
  StageEstimate est;
  est.solution = solve_lp_ss(view, p_hat);
  est.mu_star = est.solution.lambda;
  if (est.mu_star <= 1e-12) throw Error(ErrorCode::DegenerateStage, "stage LP optimum is zero");
  est.lambda_r = est.mu_star / (1.0 + eps_x_prev);
  return est;
}

lp::LinearProgram build_lp_e(const ModelView& view, std::span<const double> p, std::span<const Column> columns,
                             std::size_t cap) {
  const std::size_t T = static_cast<std::size_t>(view.horizon());
  const std::size_t n = columns.size();
  if (T * n > cap) throw Error(ErrorCode::TooLarge, "time-indexed LP needs " + std::to_string(T * n) + " variables");
  const std::size_t R = view.reward_count(), C = view.resource_count(), J = view.customer_count();
  const std::size_t lam = T * n;
  lp::LinearProgram prog(lam + 1);
  prog.objective[lam] = 1.0;

  std::vector<MeanOutcome> means;
  means.reserve(n);
  for (const auto& col : columns) means.push_back(view.mean_outcome(col.customer, col.action));
  auto var = [&](std::size_t t, std::size_t c) { return t * n + c; };

  for (std::size_t i = 0; i < R; ++i) {
    std::vector<double> row(lam + 1, 0.0);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t c = 0; c < n; ++c) row[var(t, c)] = p[columns[c].customer] * means[c].reward[i];
    row[lam] = -static_cast<double>(T);
    prog.add_row(std::move(row), lp::Relation::GreaterEqual, 0.0);
  }
  for (std::size_t i = 0; i < C; ++i) {
    const auto& surv = view.survival(i);
    for (std::size_t t = 1; t <= T; ++t) {
      std::vector<double> row(lam + 1, 0.0);
      for (std::size_t tau = 1; tau <= t; ++tau) {
        const double s = surv(static_cast<int>(t - tau + 1));
        if (s == 0.0) continue;
        for (std::size_t c = 0; c < n; ++c)
          row[var(tau - 1, c)] = p[columns[c].customer] * s * means[c].consumption[i];
      }
      prog.add_row(std::move(row), lp::Relation::LessEqual, view.capacity(i));
    }
  }
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < J; ++j) {
      std::vector<double> row(lam + 1, 0.0);
      for (std::size_t c = 0; c < n; ++c)
        if (columns[c].customer == j) row[var(t, c)] = 1.0;
      prog.add_row(std::move(row), lp::Relation::LessEqual, 1.0);
    }
  return prog;
}

ExpectedLpSolution solve_lp_e(const ModelView& view, std::span<const double> p, std::size_t cap) {
  ExpectedLpSolution out;
  out.columns = all_columns(view, cap);
  const auto prog = build_lp_e(view, p, out.columns, cap);
  const auto sol = solve_master(prog);
  const std::size_t lam = prog.variable_count() - 1;
  out.lambda = sol.x[lam];
  out.y.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(lam));
  return out;
}

}  // namespace reusable
