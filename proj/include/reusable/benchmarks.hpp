#pragma once

// Benchmark LPs over an instance: the steady-state knapsack LP (also its
// empirical-arrival variant used at each adaptive stage), the time-indexed
// expected-instance LP, and column generation for assortment action spaces.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "reusable/error.hpp"
#include "reusable/lp.hpp"
#include "reusable/model.hpp"

namespace reusable {

struct Column {
  std::size_t customer = 0;
  Action action;
  bool operator==(const Column&) const = default;
};

struct SteadyStateSolution {
  double lambda = 0.0;
  std::vector<Column> columns;
  std::vector<double> x;  // parallel to columns
  std::size_t rounds = 0;  // column-generation rounds (0 for a direct solve)

  /// x_jk, zero for columns not in the solution.
  double value(std::size_t j, Action k) const;
  /// (action, x) pairs of type j with positive mass, in column order.
  std::vector<std::pair<Action, double>> for_customer(std::size_t j) const;
};

/// Variables are the columns followed by lambda. Rows, in order: one reward
/// row per reward type (sum p w x - lambda >= 0), one knapsack row per
/// resource (sum p a d x <= c), one simplex row per customer type.
lp::LinearProgram build_lp_ss(const ModelView& view, std::span<const double> p, std::span<const Column> columns);

/// Every (type, action) column. Throws Error{TooLarge} when the action space
/// cannot be enumerated.
std::vector<Column> all_columns(const ModelView& view, std::size_t cap = 1u << 16);
lp::LinearProgram build_lp_ss(const ModelView& view, std::span<const double> p);

SteadyStateSolution solve_columns(const ModelView& view, std::span<const double> p, std::vector<Column> columns);

/// Best column for type j given reward-row and knapsack-row multipliers.
using PricingOracle =
    std::function<Action(std::size_t j, std::span<const double> reward_duals, std::span<const double> capacity_duals)>;

struct ColgenOptions {
  std::size_t max_rounds = 500;
  double reduced_cost_tolerance = 1e-7;
};

/// Raised when column generation hits its round limit; carries the last
/// restricted-master optimum.
class ColgenLimit : public Error {
 public:
  ColgenLimit(SteadyStateSolution incumbent, const std::string& what)
      : Error(ErrorCode::IterationLimit, what), incumbent_(std::move(incumbent)) {}
  const SteadyStateSolution& incumbent() const { return incumbent_; }

 private:
  SteadyStateSolution incumbent_;
};

/// Restricted master starts with the null column of every type.
SteadyStateSolution colgen_solve_ss(const ModelView& view, std::span<const double> p, const PricingOracle& pricing,
                                    const ColgenOptions& opts = {});
/// MNL pricing through the assortment LP.
SteadyStateSolution colgen_solve_ss(const ModelView& view, std::span<const double> p, const ColgenOptions& opts = {});

/// Direct solve for explicit action spaces, column generation for MNL.
SteadyStateSolution solve_lp_ss(const ModelView& view, std::span<const double> p);

/// Empirical arrival distribution of `counts`.
std::vector<double> empirical_distribution(std::span<const std::size_t> counts);

/// Empirical distribution of `samples` draws from p.
std::vector<double> saa_subsample(std::span<const double> p, std::size_t samples, Rng& rng);

struct StageEstimate {
  double mu_star = 0.0;
  double lambda_r = 0.0;
  SteadyStateSolution solution;
};

/// Solves the steady-state LP under p_hat and deflates by 1 + eps_x_prev.
/// Throws Error{DegenerateStage} when mu* <= 1e-12.
StageEstimate solve_lambda_r(const ModelView& view, std::span<const double> p_hat, double eps_x_prev);

struct ExpectedLpSolution {
  double lambda = 0.0;
  std::vector<Column> columns;
  std::vector<double> y;  // y[t * columns.size() + c], t = 0..T-1
};

/// Time-indexed LP; variables y_jk(t) for every column and t, then lambda.
/// Throws Error{TooLarge} when T * |columns| exceeds `cap`.
lp::LinearProgram build_lp_e(const ModelView& view, std::span<const double> p, std::span<const Column> columns,
                             std::size_t cap = 20000);
ExpectedLpSolution solve_lp_e(const ModelView& view, std::span<const double> p, std::size_t cap = 20000);

}  // namespace reusable
