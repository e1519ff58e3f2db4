#include "reusable/mnl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reusable/error.hpp"
#include "reusable/lp.hpp"

namespace reusable::mnl {

MnlModel::MnlModel(std::size_t feature_dim, std::size_t max_size, std::vector<Product> products,
                   std::vector<CustomerFeatures> customers)
    : feature_dim_(feature_dim),
      max_size_(max_size),
      products_(std::move(products)),
      customers_(std::move(customers)) {
  const std::size_t m = products_.size();
  utility_.assign(customers_.size() * m, 0.0);
  for (std::size_t j = 0; j < customers_.size(); ++j) {
    const auto& b = customers_[j].per_product;
    if (b.empty()) continue;
    for (std::size_t i = 0; i < m && i < b.size(); ++i) {
      double dot = 0.0;
      const auto& f = products_[i].features;
      for (std::size_t k = 0; k < std::min(f.size(), b[i].size()); ++k) dot += b[i][k] * f[k];
      utility_[j * m + i] = std::exp(dot);
    }
  }
}

double MnlModel::w_max() const {
  double w = 0.0;
  for (const auto& p : products_) w = std::max(w, p.price);
  return w;
}

namespace {

void check_size(const MnlModel& model, Assortment s) {
  if (size_of(s) > model.max_size())
    throw Error(ErrorCode::AssortmentTooLarge, "assortment of size " + std::to_string(size_of(s)) +
                                                   " exceeds limit " + std::to_string(model.max_size()));
}

double offered_utility(const MnlModel& model, std::size_t j, Assortment s) {
  double total = 0.0;
  for (std::size_t i = 0; i < model.product_count(); ++i)
    if (contains(s, i)) total += model.utility(i, j);
  return total;
}

}  // namespace

double choice_probability(const MnlModel& model, std::size_t i, std::size_t j, Assortment s) {
  check_size(model, s);
  if (!contains(s, i)) return 0.0;
  return model.utility(i, j) / (1.0 + offered_utility(model, j, s));
}

double no_purchase_probability(const MnlModel& model, std::size_t j, Assortment s) {
  check_size(model, s);
  return 1.0 / (1.0 + offered_utility(model, j, s));
}

MnlMeans mean_outcomes(const MnlModel& model, std::size_t j, Assortment s) {
  check_size(model, s);
  const std::size_t m = model.product_count();
  MnlMeans out{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
  const double denom = 1.0 + offered_utility(model, j, s);
  for (std::size_t i = 0; i < m; ++i) {
    if (!contains(s, i)) continue;
    const double q = model.utility(i, j) / denom;
    out.consumption[i] = q;
    out.reward[i] = model.products()[i].price * q;
  }
  return out;
}

double assortment_objective(const MnlModel& model, std::size_t j, Assortment s, std::span<const double> coeffs) {
  const double denom = 1.0 + offered_utility(model, j, s);
  double total = 0.0;
  for (std::size_t i = 0; i < model.product_count(); ++i)
    if (contains(s, i)) total += coeffs[i] * model.utility(i, j) / denom;
  return total;
}

Assortment best_assortment(const MnlModel& model, std::size_t j, std::span<const double> coeffs) {
  if (model.is_null_customer(j)) return 0;
  for (double c : coeffs)
    if (!std::isfinite(c)) throw Error(ErrorCode::NumericalBreakdown, "non-finite assortment coefficient");

  // A product with a nonnegative coefficient never lowers the objective: its
  // own term is >= 0 and it only dilutes the others. Keep the candidates.
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < model.product_count(); ++i)
    if (coeffs[i] < 0.0 && model.utility(i, j) > 0.0) cand.push_back(i);
  if (cand.empty()) return 0;

  const std::size_t m = cand.size();
  const std::size_t z0 = m;
  lp::LinearProgram prog(m + 1);
  for (std::size_t a = 0; a < m; ++a) prog.objective[a] = -coeffs[cand[a]];

  std::vector<double> row(m + 1, 1.0);
  prog.add_row(row, lp::Relation::Equal, 1.0);

  std::fill(row.begin(), row.end(), 0.0);
  for (std::size_t a = 0; a < m; ++a) row[a] = 1.0 / model.utility(cand[a], j);
  row[z0] = -static_cast<double>(model.max_size());
  prog.add_row(row, lp::Relation::LessEqual, 0.0);

  for (std::size_t a = 0; a < m; ++a) {
    std::vector<double> r(m + 1, 0.0);
    r[a] = 1.0 / model.utility(cand[a], j);
    r[z0] = -1.0;
    prog.add_row(std::move(r), lp::Relation::LessEqual, 0.0);
  }

  const auto sol = lp::solve_lp(prog);
  if (sol.status != lp::Status::Optimal)
    throw Error(ErrorCode::NumericalBreakdown, "assortment LP not optimal");

  const double zero = sol.x[z0];
  Assortment s = 0;
  for (std::size_t a = 0; a < m; ++a) {
    const double scaled = sol.x[a] / model.utility(cand[a], j);
    if (scaled >= zero * (1.0 - 1e-7)) s |= Assortment{1} << cand[a];
  }
  return s;
}

Assortment best_assortment_enumerated(const MnlModel& model, std::size_t j, std::span<const double> coeffs) {
  Assortment best = 0;
  double best_value = 0.0;
  for (Assortment s : enumerate_assortments(model.product_count(), model.max_size())) {
    const double v = assortment_objective(model, j, s, coeffs);
    if (v < best_value) {
      best_value = v;
      best = s;
    }
  }
  return best;
}

std::vector<Assortment> enumerate_assortments(std::size_t products, std::size_t max_size) {
  if (products > kMaxProducts) throw Error(ErrorCode::TooLarge, "too many products to enumerate");
  std::vector<Assortment> out;
  out.push_back(0);
  std::vector<std::size_t> idx;
  for (std::size_t k = 1; k <= std::min(max_size, products); ++k) {
    idx.resize(k);
    for (std::size_t a = 0; a < k; ++a) idx[a] = a;
    while (true) {
      Assortment s = 0;
      for (std::size_t a : idx) s |= Assortment{1} << a;
      out.push_back(s);
      std::size_t pos = k;
      while (pos > 0 && idx[pos - 1] == products - k + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t a = pos; a < k; ++a) idx[a] = idx[a - 1] + 1;
    }
  }
  return out;
}

double assortment_count(std::size_t products, std::size_t max_size) {
  double total = 0.0;
  double binom = 1.0;
  for (std::size_t k = 0; k <= std::min(max_size, products); ++k) {
    total += binom;
    binom = binom * static_cast<double>(products - k) / static_cast<double>(k + 1);
  }
  return total;
}

Assortment colgen_pricing(const MnlModel& model, std::size_t j, std::span<const double> reward_duals,
                          std::span<const double> capacity_duals, std::span<const double> mean_durations) {
  std::vector<double> coeffs(model.product_count());
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    coeffs[i] = reward_duals[i] * model.products()[i].price + capacity_duals[i] * mean_durations[i];
  return best_assortment(model, j, coeffs);
}

}  // namespace reusable::mnl
