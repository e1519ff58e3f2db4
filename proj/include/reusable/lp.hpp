#pragma once

// Dense two-phase primal simplex with Bland's anti-cycling rule.
//
// Problems are stated as maximization with rows a.x {<=,>=,=} b and per
// variable bounds lower <= x <= upper (lower finite, upper optional). The
// instances this library builds are small and dense, so the tableau is kept
// dense and pivots are chosen for determinism rather than speed.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace reusable::lp {

enum class Relation { LessEqual, GreaterEqual, Equal };

struct Constraint {
  std::vector<double> coeffs;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

struct LinearProgram {
  std::vector<double> objective;  // maximized
  std::vector<Constraint> constraints;
  std::vector<double> lower;  // empty means all zero
  std::vector<double> upper;  // empty means unbounded above; +inf entries allowed

  explicit LinearProgram(std::size_t variables = 0) : objective(variables, 0.0) {}

  std::size_t variable_count() const { return objective.size(); }
  std::size_t row_count() const { return constraints.size(); }

  void add_row(std::vector<double> coeffs, Relation rel, double rhs) {
    constraints.push_back({std::move(coeffs), rel, rhs});
  }

  double lower_bound(std::size_t j) const { return lower.empty() ? 0.0 : lower[j]; }
  double upper_bound(std::size_t j) const;
};

enum class Status { Optimal, Infeasible, Unbounded };

const char* to_string(Status s);

struct LpSolution {
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
  // Row multipliers y of the final basis in the original row orientation, so
  // that c_j - y.A_j <= 0 for every column at optimality. Only column
  // generation consumes these; they are not reported anywhere.
  std::vector<double> duals;
  std::size_t pivots = 0;
};

struct SolverOptions {
  double pivot_tolerance = 1e-12;
  double optimality_tolerance = 1e-10;
  double feasibility_tolerance = 1e-9;  // relative: |violation| <= tol * (1 + |rhs|)
  std::size_t max_pivots = 200000;
};

/// Throws Error{NumericalBreakdown} when the final basis cannot be certified.
LpSolution solve_lp(const LinearProgram& lp, const SolverOptions& opts = {});

/// Largest relative row or bound violation of x: max |viol| / (1 + |rhs|).
double max_violation(const LinearProgram& lp, const std::vector<double>& x);

/// Plain-text fixed layout:
///   lp <variables> <rows>
///   obj c_1 ... c_n
///   row <le|ge|eq> <rhs> a_1 ... a_n      (one per constraint)
///   bounds <l_1> <u_1> ... <l_n> <u_n>    (inf for unbounded)
/// Numbers use 17 significant digits.
void dump(const LinearProgram& lp, std::ostream& os);
std::string dump(const LinearProgram& lp);

}  // namespace reusable::lp
