#pragma once

// Multinomial-logit assortment environment. An assortment is a bitmask over
// products (product i <-> resource i); bit i set means product i is offered.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace reusable::mnl {

using Assortment = std::uint64_t;

inline constexpr std::size_t kMaxProducts = 63;

inline bool contains(Assortment s, std::size_t i) { return (s >> i) & 1U; }
inline std::size_t size_of(Assortment s) { return static_cast<std::size_t>(__builtin_popcountll(s)); }

struct Product {
  std::vector<double> features;  // f_i, length m
  double price = 0.0;            // r_i
};

struct CustomerFeatures {
  // b_ij per product, each length m. Empty for the no-arrival type.
  std::vector<std::vector<double>> per_product;
};

class MnlModel {
 public:
  MnlModel() = default;
  MnlModel(std::size_t feature_dim, std::size_t max_size, std::vector<Product> products,
           std::vector<CustomerFeatures> customers);

  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t max_size() const { return max_size_; }
  std::size_t product_count() const { return products_.size(); }
  std::size_t customer_count() const { return customers_.size(); }
  const std::vector<Product>& products() const { return products_; }
  const std::vector<CustomerFeatures>& customers() const { return customers_; }

  /// v_ij = exp(b_ij . f_i); zero for a customer without features.
  double utility(std::size_t i, std::size_t j) const { return utility_[j * products_.size() + i]; }
  bool is_null_customer(std::size_t j) const { return customers_[j].per_product.empty(); }

  double w_max() const;

 private:
  std::size_t feature_dim_ = 0;
  std::size_t max_size_ = 1;
  std::vector<Product> products_;
  std::vector<CustomerFeatures> customers_;
  std::vector<double> utility_;
};

/// q_ijS; throws Error{AssortmentTooLarge} when |S| exceeds the cardinality limit.
double choice_probability(const MnlModel& model, std::size_t i, std::size_t j, Assortment s);
double no_purchase_probability(const MnlModel& model, std::size_t j, Assortment s);

struct MnlMeans {
  std::vector<double> reward;       // w_ijS = r_i q_ijS
  std::vector<double> consumption;  // a_ijS = q_ijS
};
MnlMeans mean_outcomes(const MnlModel& model, std::size_t j, Assortment s);

/// Assortment of size <= max_size minimizing sum_i coeffs_i q_ijS, found with
/// the linear program over choice probabilities (z_i, no-purchase z_0).
Assortment best_assortment(const MnlModel& model, std::size_t j, std::span<const double> coeffs);

/// Reference minimizer by enumerating every assortment; for tests and tiny
/// instances only.
Assortment best_assortment_enumerated(const MnlModel& model, std::size_t j, std::span<const double> coeffs);

/// sum_i coeffs_i q_ijS.
double assortment_objective(const MnlModel& model, std::size_t j, Assortment s, std::span<const double> coeffs);

/// Every assortment with at most max_size products, in increasing size then
/// lexicographic bit order; the empty assortment first.
std::vector<Assortment> enumerate_assortments(std::size_t products, std::size_t max_size);

/// Number of assortments with at most max_size products (including empty).
double assortment_count(std::size_t products, std::size_t max_size);

/// Pricing step of column generation for type j. With row multipliers of the
/// steady-state master (reward rows <= 0, capacity rows >= 0), the column with
/// the largest reduced cost minimizes
///   sum_i (reward_dual_i * r_i + capacity_dual_i * d_i) * q_ijS.
Assortment colgen_pricing(const MnlModel& model, std::size_t j, std::span<const double> reward_duals,
                          std::span<const double> capacity_duals, std::span<const double> mean_durations);

}  // namespace reusable::mnl
