#include "reusable/lp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "reusable/error.hpp"

namespace reusable::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense LU with partial pivoting; used to re-solve the final basis from the
// original data so tableau drift never reaches the reported solution.
class DenseLu {
 public:
  explicit DenseLu(std::vector<double> a, std::size_t n) : n_(n), a_(std::move(a)), perm_(n) {
    for (std::size_t i = 0; i < n_; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < n_; ++k) {
      std::size_t p = k;
      double best = std::abs(at(k, k));
      for (std::size_t i = k + 1; i < n_; ++i) {
        if (std::abs(at(i, k)) > best) {
          best = std::abs(at(i, k));
          p = i;
        }
      }
      if (best < 1e-14) {
        ok_ = false;
        return;
      }
      if (p != k) {
        for (std::size_t j = 0; j < n_; ++j) std::swap(at(k, j), at(p, j));
        std::swap(perm_[k], perm_[p]);
      }
      for (std::size_t i = k + 1; i < n_; ++i) {
        const double f = at(i, k) / at(k, k);
        at(i, k) = f;
        if (f == 0.0) continue;
        for (std::size_t j = k + 1; j < n_; ++j) at(i, j) -= f * at(k, j);
      }
    }
  }

  bool ok() const { return ok_; }

  // Solves A x = b.
  std::vector<double> solve(const std::vector<double>& b) const {
    std::vector<double> y(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = b[perm_[i]];
      for (std::size_t j = 0; j < i; ++j) s -= at(i, j) * y[j];
      y[i] = s;
    }
    for (std::size_t i = n_; i-- > 0;) {
      double s = y[i];
      for (std::size_t j = i + 1; j < n_; ++j) s -= at(i, j) * y[j];
      y[i] = s / at(i, i);
    }
    return y;
  }

  // Solves A^T y = c.
  std::vector<double> solve_transpose(const std::vector<double>& c) const {
    // A = P^T L U  =>  A^T = U^T L^T P
    std::vector<double> z(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = c[i];
      for (std::size_t j = 0; j < i; ++j) s -= at(j, i) * z[j];
      z[i] = s / at(i, i);
    }
    for (std::size_t i = n_; i-- > 0;) {
      double s = z[i];
      for (std::size_t j = i + 1; j < n_; ++j) s -= at(j, i) * z[j];
      z[i] = s;
    }
    std::vector<double> y(n_);
    for (std::size_t i = 0; i < n_; ++i) y[perm_[i]] = z[i];
    return y;
  }

 private:
  double& at(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

  std::size_t n_;
  std::vector<double> a_;
  std::vector<std::size_t> perm_;
  bool ok_ = true;
};

struct Tableau {
  std::size_t rows = 0;
  std::size_t cols = 0;  // structural + slack/surplus + artificial, excluding rhs
  std::vector<double> cells;  // rows x (cols + 1), rhs in the last column
  std::vector<std::size_t> basis;
  std::vector<bool> artificial;

  double& at(std::size_t r, std::size_t c) { return cells[r * (cols + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return cells[r * (cols + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols); }
  double rhs(std::size_t r) const { return at(r, cols); }

  void pivot(std::size_t pr, std::size_t pc, std::vector<double>& reduced, double& value) {
    const std::size_t w = cols + 1;
    double* prow = &cells[pr * w];
    const double inv = 1.0 / prow[pc];
    for (std::size_t c = 0; c < w; ++c) prow[c] *= inv;
    prow[pc] = 1.0;
    for (std::size_t r = 0; r < rows; ++r) {
      if (r == pr) continue;
      double* row = &cells[r * w];
      const double f = row[pc];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < w; ++c) row[c] -= f * prow[c];
      row[pc] = 0.0;
    }
    const double f = reduced[pc];
    if (f != 0.0) {
      for (std::size_t c = 0; c < cols; ++c) reduced[c] -= f * prow[c];
      value += f * prow[cols];
      reduced[pc] = 0.0;
    }
    basis[pr] = pc;
  }
};

// Normalized problem: all rows have rhs >= 0 and every row owns one identity
// column (slack or artificial) in the starting basis.
struct Normalized {
  std::size_t structural = 0;
  std::size_t original_rows = 0;
  std::vector<double> sign;              // +1 or -1 applied to each row
  std::vector<std::size_t> identity_col;  // starting basic column per row
  Tableau tab;
  std::vector<double> cost;  // phase-2 costs over all tableau columns
  std::vector<double> matrix;  // original normalized coefficients, rows x cols
  std::vector<double> b;       // normalized rhs
};

Normalized normalize(const LinearProgram& lp) {
  const std::size_t n = lp.variable_count();
  Normalized nz;
  nz.structural = n;
  nz.original_rows = lp.row_count();

  struct Row {
    std::vector<double> a;
    Relation rel;
    double rhs;
  };
  std::vector<Row> rows;
  rows.reserve(lp.row_count() + n);
  for (const auto& c : lp.constraints) {
    if (c.coeffs.size() != n) throw Error(ErrorCode::InvalidConfig, "constraint width does not match objective");
    if (!std::isfinite(c.rhs)) throw Error(ErrorCode::InvalidConfig, "non-finite rhs");
    double shift = 0.0;
    for (std::size_t j = 0; j < n; ++j) shift += c.coeffs[j] * lp.lower_bound(j);
    rows.push_back({c.coeffs, c.relation, c.rhs - shift});
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double u = lp.upper_bound(j);
    if (std::isfinite(u)) {
      std::vector<double> a(n, 0.0);
      a[j] = 1.0;
      rows.push_back({std::move(a), Relation::LessEqual, u - lp.lower_bound(j)});
    }
  }

  const std::size_t m = rows.size();
  std::size_t slack_count = 0;
  std::size_t art_count = 0;
  nz.sign.assign(m, 1.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (rows[r].rhs < 0.0) {
      nz.sign[r] = -1.0;
      for (double& v : rows[r].a) v = -v;
      rows[r].rhs = -rows[r].rhs;
      if (rows[r].rel == Relation::LessEqual) rows[r].rel = Relation::GreaterEqual;
      else if (rows[r].rel == Relation::GreaterEqual) rows[r].rel = Relation::LessEqual;
    }
    if (rows[r].rel != Relation::Equal) ++slack_count;
    if (rows[r].rel != Relation::LessEqual) ++art_count;
  }

  Tableau& t = nz.tab;
  t.rows = m;
  t.cols = n + slack_count + art_count;
  t.cells.assign(m * (t.cols + 1), 0.0);
  t.basis.assign(m, 0);
  t.artificial.assign(t.cols, false);
  nz.identity_col.assign(m, 0);
  nz.b.assign(m, 0.0);

  std::size_t next_slack = n;
  std::size_t next_art = n + slack_count;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < n; ++j) t.at(r, j) = rows[r].a[j];
    t.rhs(r) = rows[r].rhs;
    nz.b[r] = rows[r].rhs;
    switch (rows[r].rel) {
      case Relation::LessEqual:
        t.at(r, next_slack) = 1.0;
        nz.identity_col[r] = next_slack++;
        break;
      case Relation::GreaterEqual:
        t.at(r, next_slack++) = -1.0;
        t.at(r, next_art) = 1.0;
        t.artificial[next_art] = true;
        nz.identity_col[r] = next_art++;
        break;
      case Relation::Equal:
        t.at(r, next_art) = 1.0;
        t.artificial[next_art] = true;
        nz.identity_col[r] = next_art++;
        break;
    }
    t.basis[r] = nz.identity_col[r];
  }

  nz.cost.assign(t.cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) nz.cost[j] = lp.objective[j];

  nz.matrix.assign(m * t.cols, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < t.cols; ++c) nz.matrix[r * t.cols + c] = t.at(r, c);
  return nz;
}

std::vector<double> reduced_costs(const Tableau& t, const std::vector<double>& cost, double& value) {
  std::vector<double> d(cost);
  value = 0.0;
  for (std::size_t r = 0; r < t.rows; ++r) {
    const double cb = cost[t.basis[r]];
    if (cb == 0.0) continue;
    for (std::size_t c = 0; c < t.cols; ++c) d[c] -= cb * t.at(r, c);
    value += cb * t.rhs(r);
  }
  for (std::size_t r = 0; r < t.rows; ++r) d[t.basis[r]] = 0.0;
  return d;
}

enum class PhaseResult { Optimal, Unbounded };

// Bland's rule: lowest-index improving column enters; among minimum-ratio
// rows the one whose basic variable has the lowest index leaves.
PhaseResult run_phase(Tableau& t, std::vector<double>& d, double& value, const SolverOptions& opts,
                      std::size_t& pivots) {
  int tiny_streak = 0;
  std::vector<bool> skip(t.cols, false);
  while (true) {
    std::size_t enter = t.cols;
    for (std::size_t c = 0; c < t.cols; ++c) {
      if (t.artificial[c] || skip[c]) continue;
      if (d[c] > opts.optimality_tolerance) {
        enter = c;
        break;
      }
    }
    if (enter == t.cols) return PhaseResult::Optimal;

    std::size_t leave = t.rows;
    double best = kInf;
    bool saw_tiny = false;
    for (std::size_t r = 0; r < t.rows; ++r) {
      const double a = t.at(r, enter);
      if (a <= opts.pivot_tolerance) {
        if (a > 0.0) saw_tiny = true;
        continue;
      }
      const double ratio = std::max(0.0, t.rhs(r)) / a;
      const double tie = 1e-12 * (1.0 + std::abs(best));
      if (leave == t.rows || ratio < best - tie) {
        best = ratio;
        leave = r;
      } else if (std::abs(ratio - best) <= tie && t.basis[r] < t.basis[leave]) {
        leave = r;
      }
    }
    if (leave == t.rows) {
      if (saw_tiny) {
        if (++tiny_streak > 20)
          throw Error(ErrorCode::NumericalBreakdown, "pivot magnitudes below 1e-12 repeatedly");
        skip[enter] = true;
        continue;
      }
      return PhaseResult::Unbounded;
    }
    tiny_streak = 0;
    std::fill(skip.begin(), skip.end(), false);
    t.pivot(leave, enter, d, value);
    if (++pivots > opts.max_pivots) throw Error(ErrorCode::IterationLimit, "simplex pivot limit reached");
  }
}

}  // namespace

double LinearProgram::upper_bound(std::size_t j) const {
  return upper.empty() ? kInf : upper[j];
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "Optimal";
    case Status::Infeasible: return "Infeasible";
    case Status::Unbounded: return "Unbounded";
  }
  return "?";
}

double max_violation(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (const auto& c : lp.constraints) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) lhs += c.coeffs[j] * x[j];
    double viol = 0.0;
    switch (c.relation) {
      case Relation::LessEqual: viol = lhs - c.rhs; break;
      case Relation::GreaterEqual: viol = c.rhs - lhs; break;
      case Relation::Equal: viol = std::abs(lhs - c.rhs); break;
    }
    worst = std::max(worst, viol / (1.0 + std::abs(c.rhs)));
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double l = lp.lower_bound(j);
    const double u = lp.upper_bound(j);
    worst = std::max(worst, (l - x[j]) / (1.0 + std::abs(l)));
    if (std::isfinite(u)) worst = std::max(worst, (x[j] - u) / (1.0 + std::abs(u)));
  }
  return worst;
}

LpSolution solve_lp(const LinearProgram& lp, const SolverOptions& opts) {
  Normalized nz = normalize(lp);
  Tableau& t = nz.tab;
  const std::size_t n = nz.structural;
  LpSolution sol;

  // Phase 1: maximize minus the sum of artificials.
  std::vector<double> phase1_cost(t.cols, 0.0);
  bool any_art = false;
  for (std::size_t c = 0; c < t.cols; ++c) {
    if (t.artificial[c]) {
      phase1_cost[c] = -1.0;
      any_art = true;
    }
  }
  if (any_art) {
    double value = 0.0;
    auto d = reduced_costs(t, phase1_cost, value);
    run_phase(t, d, value, opts, sol.pivots);
    double scale = 1.0;
    for (double v : nz.b) scale = std::max(scale, std::abs(v));
    if (value < -opts.feasibility_tolerance * scale) {
      sol.status = Status::Infeasible;
      return sol;
    }
    // Drive zero-level artificials out of the basis where possible; rows that
    // keep one are redundant and never change again.
    for (std::size_t r = 0; r < t.rows; ++r) {
      if (!t.artificial[t.basis[r]]) continue;
      for (std::size_t c = 0; c < t.cols; ++c) {
        if (t.artificial[c]) continue;
        if (std::abs(t.at(r, c)) > 1e-9) {
          double dummy = 0.0;
          std::vector<double> none(t.cols, 0.0);
          t.pivot(r, c, none, dummy);
          ++sol.pivots;
          break;
        }
      }
    }
  }

  double value = 0.0;
  auto d = reduced_costs(t, nz.cost, value);
  if (run_phase(t, d, value, opts, sol.pivots) == PhaseResult::Unbounded) {
    sol.status = Status::Unbounded;
    return sol;
  }

  // Primal values from the tableau, then refined from the original columns.
  std::vector<double> full(t.cols, 0.0);
  for (std::size_t r = 0; r < t.rows; ++r) full[t.basis[r]] = t.rhs(r);

  const std::size_t m = t.rows;
  std::vector<double> duals_norm(m, 0.0);
  if (m > 0) {
    std::vector<double> bmat(m * m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < m; ++k) bmat[i * m + k] = nz.matrix[i * t.cols + t.basis[k]];
    DenseLu lu(std::move(bmat), m);
    if (lu.ok()) {
      auto xb = lu.solve(nz.b);
      bool nonneg = true;
      for (double v : xb) nonneg = nonneg && v >= -1e-9;
      if (nonneg) {
        std::fill(full.begin(), full.end(), 0.0);
        for (std::size_t k = 0; k < m; ++k) full[t.basis[k]] = std::max(0.0, xb[k]);
      }
      std::vector<double> cb(m);
      for (std::size_t k = 0; k < m; ++k) cb[k] = nz.cost[t.basis[k]];
      duals_norm = lu.solve_transpose(cb);
    } else {
      // Fall back to the tableau's B^-1, held in the starting identity columns.
      for (std::size_t i = 0; i < m; ++i) {
        double y = 0.0;
        for (std::size_t r = 0; r < m; ++r) y += nz.cost[t.basis[r]] * t.at(r, nz.identity_col[i]);
        duals_norm[i] = y;
      }
    }
  }

  sol.x.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) sol.x[j] = lp.lower_bound(j) + std::max(0.0, full[j]);
  sol.duals.assign(nz.original_rows, 0.0);
  for (std::size_t i = 0; i < nz.original_rows; ++i) sol.duals[i] = nz.sign[i] * duals_norm[i];
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += lp.objective[j] * sol.x[j];

  const double viol = max_violation(lp, sol.x);
  if (viol > opts.feasibility_tolerance) {
    std::ostringstream os;
    os << "final basis violates a row by " << viol << " (relative)";
    throw Error(ErrorCode::NumericalBreakdown, os.str());
  }
  sol.status = Status::Optimal;
  return sol;
}

void dump(const LinearProgram& lp, std::ostream& os) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  os << "lp " << lp.variable_count() << ' ' << lp.row_count() << '\n';
  os << "obj";
  for (double c : lp.objective) os << ' ' << c;
  os << '\n';
  for (const auto& c : lp.constraints) {
    const char* rel = c.relation == Relation::LessEqual ? "le" : c.relation == Relation::GreaterEqual ? "ge" : "eq";
    os << "row " << rel << ' ' << c.rhs;
    for (double a : c.coeffs) os << ' ' << a;
    os << '\n';
  }
  os << "bounds";
  for (std::size_t j = 0; j < lp.variable_count(); ++j) {
    os << ' ' << lp.lower_bound(j) << ' ';
    const double u = lp.upper_bound(j);
    if (std::isfinite(u)) os << u;
    else os << "inf";
  }
  os << '\n';
  os.flags(flags);
  os.precision(prec);
}

std::string dump(const LinearProgram& lp) {
  std::ostringstream os;
  dump(lp, os);
  return os.str();
}

}  // namespace reusable::lp
