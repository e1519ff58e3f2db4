#pragma once

// Discrete-time environment. Capacity is a hard constraint: an action whose
// largest realizable consumption does not fit is replaced by the null action
// before any outcome is drawn.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "reusable/model.hpp"

namespace reusable {

/// Per-resource ledger of in-use amounts keyed by return time.
class OccupancySchedule {
 public:
  OccupancySchedule() = default;
  OccupancySchedule(std::size_t resources, int horizon, int max_duration);

  /// Releases everything due at time t (call once per step, t increasing).
  void advance_to(int t);
  /// Occupies `amount` of resource i from t until t + duration (exclusive).
  void allocate(std::size_t i, double amount, int t, int duration);

  double occupied(std::size_t i) const { return occupied_[i]; }
  double allocated_total(std::size_t i) const { return allocated_[i]; }
  double returned_total(std::size_t i) const { return returned_[i]; }
  std::size_t outstanding(std::size_t i) const { return outstanding_[i]; }

 private:
  std::size_t slots_ = 0;
  std::vector<double> returns_at_;     // [i * slots_ + t]
  std::vector<std::size_t> pending_;   // allocation count returning at [i * slots_ + t]
  std::vector<double> occupied_;
  std::vector<double> allocated_;
  std::vector<double> returned_;
  std::vector<std::size_t> outstanding_;
};

struct StepOutcome {
  int t = 0;
  std::size_t customer = 0;
  Action chosen;
  Action executed;  // chosen, or the null action when forced
  bool forced_null = false;
  std::vector<double> rewards;
  std::vector<double> consumption;
  std::vector<int> durations;  // -1 where nothing of resource i was consumed
};

struct EpisodeTrace {
  std::uint64_t seed = 0;
  std::vector<StepOutcome> steps;  // empty unless steps were kept
  std::vector<double> totals;      // per reward type
  std::size_t forced_rejections = 0;
  std::size_t capacity_violations = 0;  // steps where occupancy exceeded capacity; always zero
  std::vector<double> peak_occupancy;   // per resource

  double min_reward() const;
};

class Environment {
 public:
  Environment(const Instance& inst, std::uint64_t seed);

  int time() const { return t_; }  // steps taken so far
  const OccupancySchedule& occupancy() const { return schedule_; }

  /// Starts step t + 1: releases returns due now and draws the arrival.
  std::size_t next_arrival();
  bool feasible(std::size_t j, Action k) const;
  /// Executes k for the current arrival. Throws Error{HorizonExceeded} past T.
  StepOutcome apply(Action k);

 private:
  const Instance* inst_;
  std::vector<double> weights_;
  Rng arrivals_, outcomes_, durations_;
  OccupancySchedule schedule_;
  int t_ = 0;
  std::size_t current_ = 0;
  bool pending_ = false;
};

/// The decision rule. A policy is constructed over a ModelView and owned by
/// one episode at a time.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void begin_episode(std::uint64_t seed) = 0;
  /// Action for arrival j at step t (1-based).
  virtual Action decide(int t, std::size_t j) = 0;
  virtual void observe(const StepOutcome&) {}
};

struct EpisodeOptions {
  bool keep_steps = false;
};

/// Deterministic in (inst, policy construction, seed).
EpisodeTrace run_episode(const Instance& inst, Policy& policy, std::uint64_t seed, const EpisodeOptions& opts = {});

/// One JSON object per step.
void write_trace_jsonl(const Instance& inst, const EpisodeTrace& trace, std::ostream& os);

}  // namespace reusable
