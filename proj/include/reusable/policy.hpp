#pragma once

// Decision rules: the static LP-randomized rule, the adaptive multi-stage
// weighing rule, their per-stage hybrid, and two baselines.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reusable/benchmarks.hpp"
#include "reusable/model.hpp"
#include "reusable/sim.hpp"

namespace reusable {

/// Per customer type: action k with probability x_jk / (1 + eps); the rest of
/// the mass goes to the null action.
class StaticPolicy : public Policy {
 public:
  StaticPolicy(const ModelView& view, const SteadyStateSolution& x_star, double epsilon,
               Stream stream = Stream::policy_static);

  std::string name() const override { return "static"; }
  void begin_episode(std::uint64_t seed) override;
  Action decide(int t, std::size_t j) override;

  /// Action distribution of type j (null action last, carrying the remainder).
  const std::vector<std::pair<Action, double>>& distribution(std::size_t j) const { return table_[j]; }

 private:
  Stream stream_;
  Rng rng_;
  std::vector<std::vector<std::pair<Action, double>>> table_;
  std::vector<std::vector<double>> weights_;
};

/// Concentration radius of the stage estimate: sqrt(4 T ln(2|I|/eta) / (t_prev gamma)).
double eps_x(int horizon, int t_prev, double gamma, std::size_t card_I, double eta);
/// Reward slack sqrt(2 w_max (1+eps) ln(2|I| l/eta) / (t_r lambda_r)) before clamping.
double eps_z_unclamped(int t_r, double lambda_r, double w_max, double epsilon, std::size_t card_I, int l, double eta);
/// As above, clamped to at most 0.99 with a logged warning. Throws
/// Error{DegenerateStage} when lambda_r <= 1e-12.
double eps_z(int t_r, double lambda_r, double w_max, double epsilon, std::size_t card_I, int l, double eta);

struct StageParams {
  int index = 0;
  int offset = 0;
  int length = 1;  // t^(r)
  double lambda = 0.0;
  double eps_x_prev = 0.0;
  double eps_z = 0.0;
  double epsilon = 0.25;
  double gamma = 1.0;
  double delta = 0.0;
};

/// Log-domain penalty weights of one stage. phi is stored for every in-stage
/// time t = 1..t^(r); psi is negative and kept as ln|psi|.
class WeightState {
 public:
  WeightState(const ModelView& view, const StageParams& params);

  const StageParams& params() const { return params_; }
  int step() const { return s_; }  // current in-stage step, 1-based
  double log_phi(std::size_t i, int t) const { return log_phi_[i * L_ + static_cast<std::size_t>(t - 1)]; }
  double log_psi(std::size_t i) const { return log_psi_[i]; }

  /// Per-resource sum_t Pr(D_i >= t-s+1) phi_{i,s,t} and per-reward psi_{i,s},
  /// all scaled by exp(-log_offset) where log_offset is the largest log weight
  /// in play at this step.
  struct Coefficients {
    std::vector<double> resource;
    std::vector<double> reward;
    double log_offset = 0.0;
  };
  Coefficients coefficients() const;

  /// Advances s -> s+1 with the mean outcome of the action chosen at step s.
  void update(const MeanOutcome& chosen);

 private:
  const ModelView* view_;
  StageParams params_;
  std::size_t L_;
  int s_ = 1;
  std::vector<int> support_;
  std::vector<double> growth_;             // (gamma / c_i) ln(1 + eps)
  std::vector<std::vector<double>> log_relief_;  // [i][u] = ln(1 + kappa_i Pr(D_i >= u)), u = 0..support
  double log_one_minus_ez_ = 0.0;
  double log_reward_decay_ = 0.0;          // ln(1 - eps_z lambda / (w_max (1 + eps)))
  std::vector<double> log_phi_;
  std::vector<double> log_psi_;
};

/// Argmin of the weighted objective for arrival j; lowest index wins ties on
/// explicit action spaces, the assortment LP decides for MNL.
Action select_action(const WeightState& ws, const ModelView& view, std::size_t j);

/// Potential of a stage after the first history.size() steps took the given
/// mean outcomes, the rest bounded by the static rule. Returns ln F.
double log_potential_F(const ModelView& view, const StageParams& params, std::span<const MeanOutcome> history);
double potential_F(const ModelView& view, const StageParams& params, std::span<const MeanOutcome> history);

struct AdaptiveOptions {
  std::size_t saa_samples = 0;     // > 0: stage LPs use this many draws from p_hat
  bool drain_stage_ends = false;   // null action over the last dbar steps of each stage
  bool record = false;             // keep stage records and weight snapshots
};

struct StageRecord {
  StageParams params;
  double mu_star = 0.0;
  bool fallback = false;  // served with uniform random actions
  std::vector<MeanOutcome> chosen;  // mean outcome of each chosen action, in order
};

struct WeightSnapshot {
  int t = 0;
  int stage = 0;
  int step = 0;
  double lambda = 0.0;
  double eps_x_prev = 0.0;
  double eps_z = 0.0;
  std::vector<std::vector<double>> log_phi;  // [i][t - step], t = step..t^(r)
  std::vector<double> log_psi;
};

class AdaptivePolicy : public Policy {
 public:
  AdaptivePolicy(const ModelView& view, const AlgoConfig& cfg, AdaptiveOptions opts = {});

  std::string name() const override { return "adaptive"; }
  void begin_episode(std::uint64_t seed) override;
  Action decide(int t, std::size_t j) override;

  const std::vector<Stage>& schedule() const { return schedule_; }
  std::size_t lp_solves() const { return lp_solves_; }
  const WeightState* weights() const { return weights_ ? &*weights_ : nullptr; }
  const std::vector<StageRecord>& records() const { return records_; }
  const std::vector<WeightSnapshot>& snapshots() const { return snapshots_; }

  /// Index into schedule() of the stage containing step t.
  std::size_t stage_of(int t) const;

 private:
  void start_stage(std::size_t idx);
  void snapshot(int t);

  const ModelView* view_;
  AlgoConfig cfg_;
  AdaptiveOptions opts_;
  std::vector<Stage> schedule_;
  Rng rng_, saa_rng_;
  std::size_t stage_ = 0;
  bool started_ = false;
  bool fallback_ = true;
  std::vector<std::size_t> counts_, prev_counts_;
  std::optional<WeightState> weights_;
  std::size_t lp_solves_ = 0;
  std::vector<StageRecord> records_;
  std::vector<WeightSnapshot> snapshots_;
};

/// Adaptive rule for in-stage steps 1..s_switch of every stage, static rule
/// afterwards. Both sub-policies run at every step so their random streams
/// stay aligned with the pure policies.
class HybridPolicy : public Policy {
 public:
  HybridPolicy(const ModelView& view, const SteadyStateSolution& x_star, const AlgoConfig& cfg, int s_switch,
               AdaptiveOptions opts = {});

  std::string name() const override { return "hybrid(" + std::to_string(s_switch_) + ")"; }
  void begin_episode(std::uint64_t seed) override;
  Action decide(int t, std::size_t j) override;
  void observe(const StepOutcome& step) override;

  const AdaptivePolicy& adaptive() const { return adaptive_; }

 private:
  AdaptivePolicy adaptive_;
  StaticPolicy static_;
  int s_switch_;
};

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(const ModelView& view) : view_(&view) {}
  std::string name() const override { return "random"; }
  void begin_episode(std::uint64_t seed) override { rng_ = make_stream(seed, Stream::policy); }
  Action decide(int, std::size_t) override { return view_->uniform_action(rng_); }

 private:
  const ModelView* view_;
  Rng rng_;
};

class NullPolicy : public Policy {
 public:
  explicit NullPolicy(const ModelView& view) : null_(view.null_action()) {}
  std::string name() const override { return "always-null"; }
  void begin_episode(std::uint64_t) override {}
  Action decide(int, std::size_t) override { return null_; }

 private:
  Action null_;
};

/// JSON array of the recorded weight snapshots.
void write_snapshots_json(const AdaptivePolicy& policy, std::ostream& os);

}  // namespace reusable
