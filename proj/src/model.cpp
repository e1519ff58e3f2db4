#include "reusable/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "reusable/error.hpp"

namespace reusable {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadEpsilon: return "BadEpsilon";
    case ErrorCode::NoFeasibleDbar: return "NoFeasibleDbar";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::IterationLimit: return "IterationLimit";
    case ErrorCode::DegenerateStage: return "DegenerateStage";
    case ErrorCode::AssortmentTooLarge: return "AssortmentTooLarge";
    case ErrorCode::HorizonExceeded: return "HorizonExceeded";
    case ErrorCode::InvalidInstance: return "InvalidInstance";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// SurvivalCurve

SurvivalCurve SurvivalCurve::deterministic(int d) {
  return SurvivalCurve(std::vector<double>(static_cast<std::size_t>(std::max(d, 0)), 1.0));
}

SurvivalCurve SurvivalCurve::from_pmf(std::span<const double> pmf) {
  double total = 0.0;
  for (double p : pmf) total += p;
  std::vector<double> tail(pmf.size() > 0 ? pmf.size() - 1 : 0, 0.0);
  double acc = 0.0;
  for (std::size_t d = pmf.size(); d-- > 1;) {
    acc += pmf[d];
    tail[d - 1] = std::min(1.0, acc / total);
  }
  while (!tail.empty() && tail.back() == 0.0) tail.pop_back();
  return SurvivalCurve(std::move(tail));
}

int SurvivalCurve::support() const {
  for (std::size_t t = tail_.size(); t > 0; --t)
    if (tail_[t - 1] > 0.0) return static_cast<int>(t);
  return 0;
}

SurvivalCurve SurvivalCurve::truncated(int horizon) const {
  const auto n = std::min(tail_.size(), static_cast<std::size_t>(std::max(horizon, 0)));
  return SurvivalCurve(std::vector<double>(tail_.begin(), tail_.begin() + static_cast<std::ptrdiff_t>(n)));
}

int SurvivalCurve::sample(Rng& rng) const {
  // D = max{t : u < Pr(D >= t)}; monotone, so binary search.
  const double u = uniform01(rng);
  std::size_t lo = 0, hi = tail_.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (u < tail_[mid]) lo = mid + 1;
    else hi = mid;
  }
  return static_cast<int>(lo);
}

double mean_duration(const SurvivalCurve& curve) {
  double s = 0.0;
  for (double v : curve.values()) s += v;
  return s;
}

OutcomeDistribution OutcomeDistribution::deterministic(std::vector<double> rewards, std::vector<double> consumption) {
  return {{OutcomeScenario{1.0, std::move(rewards), std::move(consumption)}}};
}

// ---------------------------------------------------------------------------
// Instance queries

std::vector<double> Instance::arrival_weights() const {
  std::vector<double> p(customers.size());
  for (std::size_t j = 0; j < customers.size(); ++j) p[j] = customers[j].arrival_weight;
  return p;
}

Action Instance::null_action() const {
  if (is_mnl()) return Action{0};
  return Action{explicit_actions().null_action};
}

std::vector<Action> Instance::enumerate_actions(std::size_t cap) const {
  std::vector<Action> out;
  if (is_mnl()) {
    const auto& m = mnl();
    if (mnl::assortment_count(m.product_count(), m.max_size()) > static_cast<double>(cap))
      throw Error(ErrorCode::TooLarge, "assortment space exceeds enumeration cap");
    for (auto s : mnl::enumerate_assortments(m.product_count(), m.max_size())) out.push_back(Action{s});
    return out;
  }
  const std::size_t k = explicit_actions().count;
  if (k > cap) throw Error(ErrorCode::TooLarge, "action space exceeds enumeration cap");
  out.reserve(k);
  for (std::size_t a = 0; a < k; ++a) out.push_back(Action{a});
  return out;
}

Action Instance::uniform_action(Rng& rng) const {
  if (!is_mnl()) return Action{uniform_index(rng, explicit_actions().count)};
  const auto& m = mnl();
  const std::size_t n = m.product_count();
  const std::size_t kmax = std::min(m.max_size(), n);
  // Size k with probability C(n,k)/total, then a uniform k-subset.
  std::vector<double> weights(kmax + 1);
  double binom = 1.0;
  for (std::size_t k = 0; k <= kmax; ++k) {
    weights[k] = binom;
    binom = binom * static_cast<double>(n - k) / static_cast<double>(k + 1);
  }
  const std::size_t k = sample_discrete(rng, weights);
  std::vector<std::size_t> items(n);
  for (std::size_t i = 0; i < n; ++i) items[i] = i;
  mnl::Assortment s = 0;
  for (std::size_t a = 0; a < k; ++a) {
    const std::size_t pick = a + uniform_index(rng, n - a);
    std::swap(items[a], items[pick]);
    s |= mnl::Assortment{1} << items[a];
  }
  return Action{s};
}

std::string Instance::action_label(Action a) const {
  std::ostringstream os;
  if (!is_mnl()) {
    os << a.code;
    return os.str();
  }
  os << '{';
  bool first = true;
  for (std::size_t i = 0; i < mnl().product_count(); ++i) {
    if (!mnl::contains(a.code, i)) continue;
    if (!first) os << ',';
    os << i;
    first = false;
  }
  os << '}';
  return os.str();
}

MeanOutcome Instance::mean_outcome(std::size_t j, Action k) const {
  MeanOutcome out{std::vector<double>(reward_count, 0.0), std::vector<double>(resources.size(), 0.0)};
  if (j == null_customer) return out;
  if (is_mnl()) {
    auto m = mnl::mean_outcomes(mnl(), j, k.code);
    out.reward = std::move(m.reward);
    out.consumption = std::move(m.consumption);
    return out;
  }
  const auto& outcomes = customers[j].outcomes;
  if (k.code >= outcomes.size()) return out;
  for (const auto& sc : outcomes[k.code].scenarios) {
    for (std::size_t i = 0; i < sc.rewards.size() && i < reward_count; ++i) out.reward[i] += sc.prob * sc.rewards[i];
    for (std::size_t i = 0; i < sc.consumption.size() && i < resources.size(); ++i)
      out.consumption[i] += sc.prob * sc.consumption[i];
  }
  return out;
}

std::vector<double> Instance::consumption_bound(std::size_t j, Action k) const {
  std::vector<double> bound(resources.size(), 0.0);
  if (j == null_customer) return bound;
  if (is_mnl()) {
    const auto& m = mnl();
    for (std::size_t i = 0; i < m.product_count(); ++i)
      if (mnl::contains(k.code, i) && m.utility(i, j) > 0.0) bound[i] = 1.0;
    return bound;
  }
  const auto& outcomes = customers[j].outcomes;
  if (k.code >= outcomes.size()) return bound;
  for (const auto& sc : outcomes[k.code].scenarios) {
    if (sc.prob <= 0.0) continue;
    for (std::size_t i = 0; i < sc.consumption.size() && i < bound.size(); ++i)
      bound[i] = std::max(bound[i], sc.consumption[i]);
  }
  return bound;
}

RealizedOutcome Instance::sample_outcome(std::size_t j, Action k, Rng& rng) const {
  RealizedOutcome out{std::vector<double>(reward_count, 0.0), std::vector<double>(resources.size(), 0.0)};
  if (j == null_customer) return out;
  if (is_mnl()) {
    const auto& m = mnl();
    if (k.code == 0) return out;
    const auto means = mnl::mean_outcomes(m, j, k.code);
    std::vector<double> probs(means.consumption);
    probs.push_back(mnl::no_purchase_probability(m, j, k.code));
    const std::size_t pick = sample_discrete(rng, probs);
    if (pick < m.product_count()) {
      out.consumption[pick] = 1.0;
      out.reward[pick] = m.products()[pick].price;
    }
    return out;
  }
  const auto& outcomes = customers[j].outcomes;
  if (k.code >= outcomes.size() || outcomes[k.code].scenarios.empty()) return out;
  const auto& scenarios = outcomes[k.code].scenarios;
  const OutcomeScenario* chosen = &scenarios.front();
  if (scenarios.size() > 1) {
    std::vector<double> probs(scenarios.size());
    for (std::size_t s = 0; s < scenarios.size(); ++s) probs[s] = scenarios[s].prob;
    chosen = &scenarios[sample_discrete(rng, probs)];
  }
  for (std::size_t i = 0; i < chosen->rewards.size() && i < reward_count; ++i) out.reward[i] = chosen->rewards[i];
  for (std::size_t i = 0; i < chosen->consumption.size() && i < resources.size(); ++i)
    out.consumption[i] = chosen->consumption[i];
  return out;
}

double Instance::w_max() const {
  if (is_mnl()) return mnl().w_max();
  double w = 0.0;
  for (const auto& c : customers)
    for (const auto& o : c.outcomes)
      for (const auto& sc : o.scenarios)
        for (double v : sc.rewards) w = std::max(w, v);
  return w;
}

double Instance::a_max() const {
  if (is_mnl()) return resources.empty() ? 0.0 : 1.0;
  double a = 0.0;
  for (const auto& c : customers)
    for (const auto& o : c.outcomes)
      for (const auto& sc : o.scenarios)
        for (double v : sc.consumption) a = std::max(a, v);
  return a;
}

std::vector<double> Instance::mean_durations() const {
  std::vector<double> d(resources.size());
  for (std::size_t i = 0; i < resources.size(); ++i) d[i] = mean_duration(resources[i].survival);
  return d;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

std::string idx_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

void validate_distribution(const Instance& inst, const OutcomeDistribution& dist, const std::string& path,
                           std::vector<Violation>& out) {
  if (dist.scenarios.empty()) return;
  double total = 0.0;
  for (std::size_t s = 0; s < dist.scenarios.size(); ++s) {
    const auto& sc = dist.scenarios[s];
    const std::string sp = idx_path(path + ".scenarios", s);
    if (!finite_nonneg(sc.prob)) out.push_back({sp + ".prob", "probability must be a finite value >= 0"});
    total += sc.prob;
    if (sc.rewards.size() != inst.reward_count)
      out.push_back({sp + ".rewards", "expected " + std::to_string(inst.reward_count) + " reward entries"});
    if (sc.consumption.size() != inst.resources.size())
      out.push_back({sp + ".consumption", "expected " + std::to_string(inst.resources.size()) + " consumption entries"});
    for (double v : sc.rewards)
      if (!finite_nonneg(v)) {
        out.push_back({sp + ".rewards", "rewards must be finite and >= 0"});
        break;
      }
    for (double v : sc.consumption)
      if (!finite_nonneg(v)) {
        out.push_back({sp + ".consumption", "consumption must be finite and >= 0"});
        break;
      }
  }
  if (std::abs(total - 1.0) > 1e-9) out.push_back({path + ".scenarios", "scenario probabilities must sum to 1"});
}

bool distribution_is_zero(const OutcomeDistribution& dist) {
  for (const auto& sc : dist.scenarios) {
    if (sc.prob <= 0.0) continue;
    for (double v : sc.rewards)
      if (v != 0.0) return false;
    for (double v : sc.consumption)
      if (v != 0.0) return false;
  }
  return true;
}

}  // namespace

std::vector<Violation> validate_instance(const Instance& inst) {
  std::vector<Violation> out;
  if (inst.horizon < 1) out.push_back({"horizon", "horizon must be >= 1"});

  for (std::size_t i = 0; i < inst.resources.size(); ++i) {
    const auto& r = inst.resources[i];
    const std::string p = idx_path("resources", i);
    if (!(std::isfinite(r.capacity) && r.capacity > 0.0)) out.push_back({p + ".capacity", "capacity must be > 0"});
    if (!finite_nonneg(r.unit_price)) out.push_back({p + ".unit_price", "unit price must be >= 0"});
    const auto v = r.survival.values();
    bool range_ok = true;
    for (double x : v) range_ok = range_ok && std::isfinite(x) && x >= 0.0 && x <= 1.0;
    if (!range_ok) out.push_back({p + ".survival", "survival probabilities must lie in [0, 1]"});
    for (std::size_t t = 1; t < v.size(); ++t) {
      if (v[t] > v[t - 1]) {
        out.push_back({p + ".survival", "survival curve must be non-increasing (entry " + std::to_string(t + 1) +
                                            " exceeds entry " + std::to_string(t) + ")"});
        break;
      }
    }
  }

  if (inst.customers.empty()) out.push_back({"customers", "at least one customer type (the null type) is required"});
  double weight_sum = 0.0;
  for (std::size_t j = 0; j < inst.customers.size(); ++j) {
    const double w = inst.customers[j].arrival_weight;
    if (!finite_nonneg(w)) out.push_back({idx_path("customers", j) + ".weight", "arrival weight must be >= 0"});
    weight_sum += w;
  }
  if (!inst.customers.empty() && std::abs(weight_sum - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "arrival weights must sum to 1 (sum is " << weight_sum << ")";
    out.push_back({"customers", os.str()});
  }
  if (inst.null_customer >= inst.customers.size())
    out.push_back({"null_customer", "null customer index out of range"});

  if (!inst.is_mnl()) {
    const auto& ea = inst.explicit_actions();
    if (inst.reward_count < 1) out.push_back({"reward_count", "at least one reward type is required"});
    if (ea.count < 1) out.push_back({"actions.count", "at least one action (the null action) is required"});
    if (ea.null_action >= ea.count) out.push_back({"actions.null_action", "null action index out of range"});
    for (std::size_t j = 0; j < inst.customers.size(); ++j) {
      const auto& c = inst.customers[j];
      const std::string p = idx_path("customers", j);
      const bool is_null = j == inst.null_customer;
      if (!(is_null && c.outcomes.empty()) && c.outcomes.size() != ea.count) {
        out.push_back({p + ".outcomes", "expected one outcome distribution per action (" + std::to_string(ea.count) + ")"});
        continue;
      }
      for (std::size_t k = 0; k < c.outcomes.size(); ++k) {
        const std::string op = idx_path(p + ".outcomes", k);
        validate_distribution(inst, c.outcomes[k], op, out);
        if (is_null && !distribution_is_zero(c.outcomes[k]))
          out.push_back({op, "the null customer type must have identically zero outcomes"});
        if (k == ea.null_action && !distribution_is_zero(c.outcomes[k]))
          out.push_back({op, "the null action must have identically zero outcomes"});
      }
    }
    return out;
  }

  const auto& m = inst.mnl();
  if (m.product_count() != inst.resources.size())
    out.push_back({"mnl.products", "one product per resource is required"});
  if (m.product_count() > mnl::kMaxProducts) out.push_back({"mnl.products", "at most 63 products are supported"});
  if (inst.reward_count != inst.resources.size())
    out.push_back({"reward_count", "MNL instances earn one reward type per resource"});
  if (m.max_size() < 1) out.push_back({"mnl.n", "assortment size limit must be >= 1"});
  for (std::size_t i = 0; i < m.product_count(); ++i) {
    const auto& prod = m.products()[i];
    const std::string p = idx_path("mnl.products", i);
    if (prod.features.size() != m.feature_dim()) out.push_back({p + ".f", "feature length must equal m"});
    if (i < inst.resources.size() && prod.price != inst.resources[i].unit_price)
      out.push_back({p + ".price", "product price must equal the resource unit price"});
  }
  if (m.customer_count() != inst.customers.size())
    out.push_back({"mnl.customers", "one feature block per customer type is required"});
  for (std::size_t j = 0; j < m.customer_count(); ++j) {
    const auto& b = m.customers()[j].per_product;
    const std::string p = idx_path("mnl.customers", j);
    if (j == inst.null_customer) {
      if (!b.empty()) out.push_back({p + ".b", "the null customer type carries no features"});
      continue;
    }
    if (b.size() != m.product_count()) {
      out.push_back({p + ".b", "one feature vector per product is required"});
      continue;
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (b[i].size() != m.feature_dim()) {
        out.push_back({idx_path(p + ".b", i), "feature length must equal m"});
        continue;
      }
      const double v = m.utility(i, j);
      if (!(std::isfinite(v) && v > 0.0)) out.push_back({idx_path(p + ".b", i), "utility must be finite and > 0"});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Derived scalars

int dbar_for(std::span<const SurvivalCurve> curves, double delta, int horizon) {
  if (delta < 0.0) throw Error(ErrorCode::InvalidConfig, "delta must be >= 0");
  std::size_t longest = 0;
  for (const auto& c : curves) longest = std::max(longest, c.values().size());
  const int upper = std::max(horizon, 1);
  for (int d = 1; d <= upper; ++d) {
    bool ok = true;
    for (const auto& c : curves) {
      double tail = 0.0;
      const auto v = c.values();
      for (std::size_t t = static_cast<std::size_t>(d); t < v.size(); ++t) tail += v[t];
      if (tail > delta + 1e-12) {
        ok = false;
        break;
      }
    }
    if (ok) return d;
  }
  throw Error(ErrorCode::NoFeasibleDbar, "no dbar <= " + std::to_string(horizon) + " meets the tail bound");
}

int dbar_for(const Instance& inst, double delta) {
  std::vector<SurvivalCurve> curves;
  for (const auto& r : inst.resources) curves.push_back(r.survival);
  return dbar_for(curves, delta, inst.horizon);
}

double compute_gamma(const Instance& inst, double lambda_ss) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double a_max = inst.a_max();
  double cap_term = inf;
  if (a_max > 0.0)
    for (const auto& r : inst.resources) cap_term = std::min(cap_term, r.capacity / a_max);
  const double w_max = inst.w_max();
  double reward_term;
  if (lambda_ss <= 0.0) reward_term = 0.0;
  else reward_term = w_max > 0.0 ? static_cast<double>(inst.horizon) * lambda_ss / w_max : inf;
  return std::min(cap_term, reward_term);
}

std::vector<Stage> stage_schedule(int horizon, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 0.5))
    throw Error(ErrorCode::BadEpsilon, "epsilon must lie in (0, 1/2]");
  const double l_real = -std::log2(epsilon);
  const int l = static_cast<int>(std::lround(l_real));
  if (std::abs(std::ldexp(1.0, -l) - epsilon) > 1e-12)
    throw Error(ErrorCode::BadEpsilon, "epsilon must be a negative power of two");
  const double explore = epsilon * horizon;
  const long rounded = std::lround(explore);
  if (std::abs(explore - static_cast<double>(rounded)) > 1e-9 || rounded < 1)
    throw Error(ErrorCode::BadEpsilon, "epsilon * T must be a positive integer");
  const int base = static_cast<int>(rounded);
  std::vector<Stage> out;
  out.push_back({-1, 0, base});
  for (int r = 0; r < l; ++r) out.push_back({r, base << r, base << r});
  return out;
}

std::vector<Stage> relaxed_stage_schedule(int horizon, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 0.5))
    throw Error(ErrorCode::BadEpsilon, "epsilon must lie in (0, 1/2]");
  if (horizon < 2) throw Error(ErrorCode::BadEpsilon, "relaxed schedule needs T >= 2");
  const int l = std::max(1, static_cast<int>(std::ceil(-std::log2(epsilon) - 1e-12)));
  std::vector<Stage> out;
  int offset = 0;
  for (int r = -1; r < l && offset < horizon; ++r) {
    const double target = epsilon * horizon * std::ldexp(1.0, std::max(r, 0));
    int len = std::max(1, static_cast<int>(std::lround(target)));
    if (r == -1) len = std::min(len, horizon - 1);
    if (r == l - 1 || offset + len > horizon) len = horizon - offset;
    out.push_back({r, offset, len});
    offset += len;
  }
  if (offset < horizon) out.back().length += horizon - offset;
  return out;
}

double AlgoConfig::effective_eta() const {
  if (eta > 0.0) return eta;
  return epsilon / (5.0 * std::log2(1.0 / epsilon));
}

int AlgoConfig::stage_count() const {
  return std::max(1, static_cast<int>(std::ceil(-std::log2(epsilon) - 1e-12)));
}

std::vector<Violation> validate_config(const AlgoConfig& cfg, int horizon) {
  std::vector<Violation> out;
  if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 0.5)) out.push_back({"epsilon", "epsilon must lie in (0, 1/2]"});
  else if (!cfg.relaxed_schedule) {
    try {
      stage_schedule(horizon, cfg.epsilon);
    } catch (const Error& e) {
      out.push_back({"epsilon", e.what()});
    }
  }
  if (cfg.epsilon * horizon + 1e-9 < cfg.dbar)
    out.push_back({"epsilon", "epsilon must be >= dbar / T"});
  if (!(cfg.gamma > 0.0)) out.push_back({"gamma", "gamma must be > 0"});
  if (!(cfg.delta >= 0.0 && cfg.delta < 1.0)) out.push_back({"delta", "delta must lie in [0, 1)"});
  if (cfg.dbar < 1) out.push_back({"dbar", "dbar must be >= 1"});
  const double eta = cfg.effective_eta();
  if (!(eta > 0.0 && eta < 1.0)) out.push_back({"eta", "eta must lie in (0, 1)"});
  return out;
}

// ---------------------------------------------------------------------------
// ModelView

ModelView::ModelView(const Instance& inst) : inst_(&inst) {
  durations_ = inst.mean_durations();
  for (const auto& r : inst.resources) max_support_ = std::max(max_support_, r.survival.support());
  w_max_ = inst.w_max();
  a_max_ = inst.a_max();
  if (!inst.is_mnl()) {
    action_count_ = inst.explicit_actions().count;
    auto cache = std::make_shared<std::vector<MeanOutcome>>();
    cache->reserve(inst.customers.size() * action_count_);
    for (std::size_t j = 0; j < inst.customers.size(); ++j)
      for (std::size_t k = 0; k < action_count_; ++k) cache->push_back(inst.mean_outcome(j, Action{k}));
    explicit_means_ = std::move(cache);
  }
}

std::size_t ModelView::explicit_action_count() const { return action_count_; }

MeanOutcome ModelView::mean_outcome(std::size_t j, Action k) const {
  if (explicit_means_) return explicit_mean(j, k.code);
  return inst_->mean_outcome(j, k);
}

}  // namespace reusable
