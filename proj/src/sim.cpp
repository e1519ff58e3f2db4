#include "reusable/sim.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "reusable/error.hpp"

namespace reusable {

OccupancySchedule::OccupancySchedule(std::size_t resources, int horizon, int max_duration)
    : slots_(static_cast<std::size_t>(horizon) + static_cast<std::size_t>(std::max(max_duration, 0)) + 2),
      returns_at_(resources * slots_, 0.0),
      pending_(resources * slots_, 0),
      occupied_(resources, 0.0),
      allocated_(resources, 0.0),
      returned_(resources, 0.0),
      outstanding_(resources, 0) {}

void OccupancySchedule::advance_to(int t) {
  const auto slot = static_cast<std::size_t>(t);
  for (std::size_t i = 0; i < occupied_.size(); ++i) {
    const std::size_t idx = i * slots_ + slot;
    if (pending_[idx] == 0) continue;
    occupied_[i] -= returns_at_[idx];
    returned_[i] += returns_at_[idx];
    outstanding_[i] -= pending_[idx];
    // Subtraction drift cannot leave phantom occupancy once nothing is out.
    if (outstanding_[i] == 0) occupied_[i] = 0.0;
    returns_at_[idx] = 0.0;
    pending_[idx] = 0;
  }
}

void OccupancySchedule::allocate(std::size_t i, double amount, int t, int duration) {
  allocated_[i] += amount;
  if (duration <= 0 || amount == 0.0) {
    returned_[i] += amount;
    return;
  }
  const std::size_t idx = i * slots_ + static_cast<std::size_t>(t + duration);
  occupied_[i] += amount;
  returns_at_[idx] += amount;
  ++pending_[idx];
  ++outstanding_[i];
}

double EpisodeTrace::min_reward() const {
  if (totals.empty()) return 0.0;
  return *std::min_element(totals.begin(), totals.end());
}

Environment::Environment(const Instance& inst, std::uint64_t seed)
    : inst_(&inst),
      weights_(inst.arrival_weights()),
      arrivals_(make_stream(seed, Stream::arrivals)),
      outcomes_(make_stream(seed, Stream::outcomes)),
      durations_(make_stream(seed, Stream::durations)) {
  int longest = 0;
  for (const auto& r : inst.resources) longest = std::max(longest, r.survival.support());
  schedule_ = OccupancySchedule(inst.resources.size(), inst.horizon, longest);
}

std::size_t Environment::next_arrival() {
  if (t_ >= inst_->horizon) throw Error(ErrorCode::HorizonExceeded, "episode already reached T");
  ++t_;
  schedule_.advance_to(t_);
  current_ = sample_discrete(arrivals_, weights_);
  pending_ = true;
  return current_;
}

bool Environment::feasible(std::size_t j, Action k) const {
  const auto bound = inst_->consumption_bound(j, k);
  for (std::size_t i = 0; i < bound.size(); ++i) {
    if (bound[i] <= 0.0) continue;
    if (schedule_.occupied(i) + bound[i] > inst_->resources[i].capacity) return false;
  }
  return true;
}

StepOutcome Environment::apply(Action k) {
  if (!pending_) throw Error(ErrorCode::HorizonExceeded, "apply without a pending arrival");
  pending_ = false;
  StepOutcome out;
  out.t = t_;
  out.customer = current_;
  out.chosen = k;
  out.executed = k;
  const std::size_t C = inst_->resources.size();
  out.durations.assign(C, -1);
  if (!feasible(current_, k)) {
    out.forced_null = true;
    out.executed = inst_->null_action();
    out.rewards.assign(inst_->reward_count, 0.0);
    out.consumption.assign(C, 0.0);
    return out;
  }
  auto realized = inst_->sample_outcome(current_, k, outcomes_);
  out.rewards = std::move(realized.reward);
  out.consumption = std::move(realized.consumption);
  for (std::size_t i = 0; i < C; ++i) {
    if (out.consumption[i] <= 0.0) continue;
    const int d = inst_->resources[i].survival.sample(durations_);
    out.durations[i] = d;
    schedule_.allocate(i, out.consumption[i], t_, d);
  }
  return out;
}

EpisodeTrace run_episode(const Instance& inst, Policy& policy, std::uint64_t seed, const EpisodeOptions& opts) {
  Environment env(inst, seed);
  policy.begin_episode(seed);
  EpisodeTrace trace;
  trace.seed = seed;
  trace.totals.assign(inst.reward_count, 0.0);
  trace.peak_occupancy.assign(inst.resources.size(), 0.0);
  if (opts.keep_steps) trace.steps.reserve(static_cast<std::size_t>(inst.horizon));
  for (int t = 1; t <= inst.horizon; ++t) {
    const std::size_t j = env.next_arrival();
    const Action k = policy.decide(t, j);
    StepOutcome step = env.apply(k);
    policy.observe(step);
    if (step.forced_null) ++trace.forced_rejections;
    for (std::size_t i = 0; i < step.rewards.size(); ++i) trace.totals[i] += step.rewards[i];
    for (std::size_t i = 0; i < inst.resources.size(); ++i) {
      const double occ = env.occupancy().occupied(i);
      trace.peak_occupancy[i] = std::max(trace.peak_occupancy[i], occ);
      if (occ > inst.resources[i].capacity) ++trace.capacity_violations;
    }
    if (opts.keep_steps) trace.steps.push_back(std::move(step));
  }
  return trace;
}

void write_trace_jsonl(const Instance& inst, const EpisodeTrace& trace, std::ostream& os) {
  std::vector<double> running(inst.reward_count, 0.0);
  for (const auto& s : trace.steps) {
    for (std::size_t i = 0; i < s.rewards.size() && i < running.size(); ++i) running[i] += s.rewards[i];
    nlohmann::json line = {
        {"t", s.t},
        {"customer", s.customer},
        {"chosen", inst.action_label(s.chosen)},
        {"executed", inst.action_label(s.executed)},
        {"forced_null", s.forced_null},
        {"rewards", s.rewards},
        {"consumption", s.consumption},
        {"durations", s.durations},
        {"totals", running},
    };
    os << line.dump() << '\n';
  }
}

}  // namespace reusable
