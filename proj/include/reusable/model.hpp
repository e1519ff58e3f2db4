#pragma once

// Problem instance: reusable resources with capacities and usage-duration
// survival curves, customer types with arrival weights and outcome
// distributions, an action space, and the horizon T.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "reusable/mnl.hpp"
#include "reusable/rng.hpp"

namespace reusable {

/// Pr(D >= t) for t = 1, 2, ...; zero beyond the stored values, one for t <= 0.
class SurvivalCurve {
 public:
  SurvivalCurve() = default;
  explicit SurvivalCurve(std::vector<double> tail) : tail_(std::move(tail)) {}

  /// Deterministic duration D = d.
  static SurvivalCurve deterministic(int d);
  /// From a pmf over durations 0..pmf.size()-1.
  static SurvivalCurve from_pmf(std::span<const double> pmf);

  double operator()(int t) const {
    if (t <= 0) return 1.0;
    const auto idx = static_cast<std::size_t>(t - 1);
    return idx < tail_.size() ? tail_[idx] : 0.0;
  }

  std::span<const double> values() const { return tail_; }
  /// Largest t with Pr(D >= t) > 0 (zero when D = 0 surely).
  int support() const;
  /// Copy keeping at most `horizon` entries.
  SurvivalCurve truncated(int horizon) const;

  /// Inverse-CDF draw of D.
  int sample(Rng& rng) const;

  bool operator==(const SurvivalCurve&) const = default;

 private:
  std::vector<double> tail_;
};

struct ResourceSpec {
  double capacity = 1.0;    // c_i
  SurvivalCurve survival;   // D_i
  double unit_price = 0.0;  // r_i
};

/// One realization of (W_jk, A_jk) with its probability.
struct OutcomeScenario {
  double prob = 1.0;
  std::vector<double> rewards;      // per reward type
  std::vector<double> consumption;  // per resource
};

/// Joint outcome distribution O_jk as a finite scenario list; an empty list is
/// the identically-zero outcome.
struct OutcomeDistribution {
  std::vector<OutcomeScenario> scenarios;

  static OutcomeDistribution zero() { return {}; }
  static OutcomeDistribution deterministic(std::vector<double> rewards, std::vector<double> consumption);
};

struct CustomerType {
  double arrival_weight = 0.0;  // p_j
  // Explicit action spaces: one distribution per action. Empty for MNL
  // instances and allowed for the null type (identically zero).
  std::vector<OutcomeDistribution> outcomes;
};

struct ExplicitActions {
  std::size_t count = 1;
  std::size_t null_action = 0;
};

/// Explicit action index, or an MNL assortment bitmask (empty = null).
struct Action {
  std::uint64_t code = 0;
  auto operator<=>(const Action&) const = default;
};

struct MeanOutcome {
  std::vector<double> reward;       // w_ijk over reward types
  std::vector<double> consumption;  // a_ijk over resources
};

struct RealizedOutcome {
  std::vector<double> reward;
  std::vector<double> consumption;
};

struct Instance {
  std::vector<ResourceSpec> resources;
  std::size_t reward_count = 1;
  std::vector<CustomerType> customers;
  std::size_t null_customer = 0;
  std::variant<ExplicitActions, mnl::MnlModel> actions;
  int horizon = 1;

  bool is_mnl() const { return std::holds_alternative<mnl::MnlModel>(actions); }
  const mnl::MnlModel& mnl() const { return std::get<mnl::MnlModel>(actions); }
  const ExplicitActions& explicit_actions() const { return std::get<ExplicitActions>(actions); }

  std::size_t resource_count() const { return resources.size(); }
  std::size_t customer_count() const { return customers.size(); }
  std::vector<double> arrival_weights() const;

  Action null_action() const;
  /// All actions (explicit list or every assortment up to the size limit).
  /// Throws Error{TooLarge} beyond `cap` actions.
  std::vector<Action> enumerate_actions(std::size_t cap = 1u << 20) const;
  Action uniform_action(Rng& rng) const;
  std::string action_label(Action a) const;

  MeanOutcome mean_outcome(std::size_t j, Action k) const;
  /// Largest realizable consumption of each resource under (j, k).
  std::vector<double> consumption_bound(std::size_t j, Action k) const;
  RealizedOutcome sample_outcome(std::size_t j, Action k, Rng& rng) const;

  double w_max() const;
  double a_max() const;
  std::vector<double> mean_durations() const;
};

struct Violation {
  std::string path;
  std::string message;
};

/// Every invariant violation; empty iff the instance is valid.
std::vector<Violation> validate_instance(const Instance& inst);

double mean_duration(const SurvivalCurve& curve);

/// Smallest dbar in [1, horizon] whose tail sum over t > dbar is at most delta
/// for every curve. Throws Error{NoFeasibleDbar}.
int dbar_for(std::span<const SurvivalCurve> curves, double delta, int horizon);
int dbar_for(const Instance& inst, double delta);

/// min{ min_i c_i / a_max, T lambda / w_max }.
double compute_gamma(const Instance& inst, double lambda_ss);

struct Stage {
  int index;   // -1 for exploration
  int offset;  // steps before the stage starts
  int length;  // t^(r)
  bool operator==(const Stage&) const = default;
};

/// Exact schedule: epsilon = 2^-l with l >= 1 and epsilon*T integral.
/// Throws Error{BadEpsilon}.
std::vector<Stage> stage_schedule(int horizon, double epsilon);

/// Any epsilon in (0, 1/2]: l = ceil(log2(1/epsilon)) stages after exploration,
/// lengths rounded from epsilon*T*2^r, the last stage padded or truncated to
/// end exactly at T.
std::vector<Stage> relaxed_stage_schedule(int horizon, double epsilon);

struct AlgoConfig {
  double epsilon = 0.25;
  double gamma = 1.0;
  double delta = 0.0;
  int dbar = 1;
  double eta = 0.0;  // <= 0 selects epsilon / (5 log2(1/epsilon))
  std::uint64_t seed = 0;
  bool relaxed_schedule = false;

  double effective_eta() const;
  int stage_count() const;  // l
};

/// Violations of AlgoConfig invariants against a horizon.
std::vector<Violation> validate_config(const AlgoConfig& cfg, int horizon);

/// What a policy may observe: horizon, capacities, survival curves, prices,
/// and per-type mean outcomes with the action space. The arrival distribution
/// is deliberately not reachable through this view.
class ModelView {
 public:
  explicit ModelView(const Instance& inst);

  int horizon() const { return inst_->horizon; }
  std::size_t resource_count() const { return inst_->resources.size(); }
  std::size_t reward_count() const { return inst_->reward_count; }
  std::size_t customer_count() const { return inst_->customers.size(); }
  std::size_t null_customer() const { return inst_->null_customer; }
  double capacity(std::size_t i) const { return inst_->resources[i].capacity; }
  const SurvivalCurve& survival(std::size_t i) const { return inst_->resources[i].survival; }
  double mean_duration(std::size_t i) const { return durations_[i]; }
  std::span<const double> mean_durations() const { return durations_; }
  int max_support() const { return max_support_; }
  double w_max() const { return w_max_; }
  double a_max() const { return a_max_; }

  bool is_mnl() const { return inst_->is_mnl(); }
  const mnl::MnlModel& mnl() const { return inst_->mnl(); }
  std::size_t explicit_action_count() const;

  Action null_action() const { return inst_->null_action(); }
  std::vector<Action> enumerate_actions(std::size_t cap = 1u << 20) const { return inst_->enumerate_actions(cap); }
  Action uniform_action(Rng& rng) const { return inst_->uniform_action(rng); }

  MeanOutcome mean_outcome(std::size_t j, Action k) const;
  /// Cached means of an explicit action space.
  const MeanOutcome& explicit_mean(std::size_t j, std::size_t k) const {
    return (*explicit_means_)[j * action_count_ + k];
  }

 private:
  const Instance* inst_;
  std::vector<double> durations_;
  int max_support_ = 0;
  double w_max_ = 0.0;
  double a_max_ = 0.0;
  std::shared_ptr<const std::vector<MeanOutcome>> explicit_means_;
  std::size_t action_count_ = 0;
};

}  // namespace reusable
