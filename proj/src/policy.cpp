#include "reusable/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "reusable/error.hpp"
#include "reusable/logging.hpp"

namespace reusable {

// ---------------------------------------------------------------------------
// Static rule

StaticPolicy::StaticPolicy(const ModelView& view, const SteadyStateSolution& x_star, double epsilon, Stream stream)
    : stream_(stream) {
  const Action null = view.null_action();
  table_.resize(view.customer_count());
  weights_.resize(view.customer_count());
  for (std::size_t j = 0; j < view.customer_count(); ++j) {
    double used = 0.0;
    if (j != view.null_customer()) {
      for (const auto& [k, x] : x_star.for_customer(j)) {
        if (k == null) continue;
        const double prob = x / (1.0 + epsilon);
        table_[j].emplace_back(k, prob);
        used += prob;
      }
    }
    table_[j].emplace_back(null, std::max(0.0, 1.0 - used));
    for (const auto& e : table_[j]) weights_[j].push_back(e.second);
  }
}

void StaticPolicy::begin_episode(std::uint64_t seed) { rng_ = make_stream(seed, stream_); }

Action StaticPolicy::decide(int, std::size_t j) {
  // One draw per step whatever the type, so the stream position depends on t only.
  return table_[j][sample_discrete(rng_, weights_[j])].first;
}

// ---------------------------------------------------------------------------
// Stage constants

double eps_x(int horizon, int t_prev, double gamma, std::size_t card_I, double eta) {
  return std::sqrt(4.0 * horizon * std::log(2.0 * static_cast<double>(card_I) / eta) / (t_prev * gamma));
}

double eps_z_unclamped(int t_r, double lambda_r, double w_max, double epsilon, std::size_t card_I, int l,
                       double eta) {
  return std::sqrt(2.0 * w_max * (1.0 + epsilon) * std::log(2.0 * static_cast<double>(card_I) * l / eta) /
                   (t_r * lambda_r));
}

double eps_z(int t_r, double lambda_r, double w_max, double epsilon, std::size_t card_I, int l, double eta) {
  if (lambda_r <= 1e-12) throw Error(ErrorCode::DegenerateStage, "stage reward target is zero");
  const double v = eps_z_unclamped(t_r, lambda_r, w_max, epsilon, card_I, l, eta);
  if (v > 0.99) {
    std::ostringstream os;
    os << "reward slack " << v << " exceeds 0.99 at stage length " << t_r << "; clamped to 0.99";
    log::warning_once("eps_z-clamp", os.str());
    return 0.99;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Weights

WeightState::WeightState(const ModelView& view, const StageParams& params)
    : view_(&view), params_(params), L_(static_cast<std::size_t>(params.length)) {
  const std::size_t C = view.resource_count(), R = view.reward_count();
  const double eps = params.epsilon, gamma = params.gamma, delta = params.delta;
  const double log1p_eps = std::log1p(eps);
  support_.resize(C);
  growth_.resize(C);
  log_relief_.resize(C);
  log_phi_.assign(C * L_, 0.0);
  for (std::size_t i = 0; i < C; ++i) {
    const auto& surv = view.survival(i);
    const double c = view.capacity(i), d = view.mean_duration(i);
    support_[i] = surv.support();
    growth_[i] = gamma / c * log1p_eps;
    const double kappa = d > 0.0 ? eps * gamma / (d * (1.0 + eps)) : 0.0;
    log_relief_[i].assign(static_cast<std::size_t>(support_[i]) + 1, 0.0);
    for (int u = 1; u <= support_[i]; ++u) log_relief_[i][static_cast<std::size_t>(u)] = std::log1p(kappa * surv(u));
    double acc = std::log(eps * gamma / c) - (gamma - delta) * log1p_eps;
    for (std::size_t t = 1; t <= L_; ++t) {
      log_phi_[i * L_ + t - 1] = acc;
      if (t <= static_cast<std::size_t>(support_[i])) acc += log_relief_[i][t];
    }
  }
  const double w = view.w_max(), ez = params.eps_z, lam = params.lambda;
  const double Ld = static_cast<double>(L_);
  log_one_minus_ez_ = std::log1p(-ez);
  log_reward_decay_ = std::log1p(-ez * lam / (w * (1.0 + eps)));
  if (!std::isfinite(log_one_minus_ez_) || !std::isfinite(log_reward_decay_))
    throw Error(ErrorCode::NumericalBreakdown, "reward weights need eps_z < 1 and eps_z lambda < w_max (1 + eps)");
  log_psi_.assign(R, std::log(ez / w) + (Ld - 1.0) * log_reward_decay_ - (1.0 - ez) * Ld * lam / w * log_one_minus_ez_);
}

WeightState::Coefficients WeightState::coefficients() const {
  const std::size_t C = support_.size();
  const std::size_t s = static_cast<std::size_t>(s_);
  auto window_end = [&](std::size_t i) {
    return std::min(L_, s + static_cast<std::size_t>(support_[i]) - (support_[i] > 0 ? 1 : 0));
  };
  double M = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < C; ++i) {
    if (support_[i] == 0) continue;
    for (std::size_t t = s; t <= window_end(i); ++t) M = std::max(M, log_phi_[i * L_ + t - 1]);
  }
  for (double v : log_psi_) M = std::max(M, v);
  if (!std::isfinite(M)) M = 0.0;

  Coefficients out;
  out.log_offset = M;
  out.resource.assign(C, 0.0);
  for (std::size_t i = 0; i < C; ++i) {
    if (support_[i] == 0) continue;
    const auto& surv = view_->survival(i);
    double acc = 0.0;
    for (std::size_t t = s; t <= window_end(i); ++t)
      acc += surv(static_cast<int>(t - s + 1)) * std::exp(log_phi_[i * L_ + t - 1] - M);
    out.resource[i] = acc;
  }
  out.reward.resize(log_psi_.size());
  for (std::size_t i = 0; i < log_psi_.size(); ++i) out.reward[i] = -std::exp(log_psi_[i] - M);
  return out;
}

void WeightState::update(const MeanOutcome& chosen) {
  if (static_cast<std::size_t>(s_) > L_) throw Error(ErrorCode::HorizonExceeded, "weight update past stage end");
  const std::size_t s = static_cast<std::size_t>(s_);
  for (std::size_t i = 0; i < support_.size(); ++i) {
    const auto& surv = view_->survival(i);
    const double a = chosen.consumption[i];
    const std::size_t last = std::min(L_, s + static_cast<std::size_t>(support_[i]));
    for (std::size_t t = s + 1; t <= last; ++t) {
      const int lag = static_cast<int>(t - s);
      log_phi_[i * L_ + t - 1] += growth_[i] * a * surv(lag + 1) - log_relief_[i][static_cast<std::size_t>(lag)];
    }
  }
  const double w = view_->w_max();
  for (std::size_t i = 0; i < log_psi_.size(); ++i)
    log_psi_[i] += chosen.reward[i] / w * log_one_minus_ez_ - log_reward_decay_;
  ++s_;
}

Action select_action(const WeightState& ws, const ModelView& view, std::size_t j) {
  const auto coeff = ws.coefficients();
  if (view.is_mnl()) {
    const auto& model = view.mnl();
    std::vector<double> c(model.product_count());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = coeff.resource[i] + model.products()[i].price * coeff.reward[i];
    return Action{mnl::best_assortment(model, j, c)};
  }
  const std::size_t K = view.explicit_action_count();
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    const auto& m = view.explicit_mean(j, k);
    double v = 0.0;
    for (std::size_t i = 0; i < coeff.resource.size(); ++i) v += m.consumption[i] * coeff.resource[i];
    for (std::size_t i = 0; i < coeff.reward.size(); ++i) v += m.reward[i] * coeff.reward[i];
    if (v < best_value) {
      best_value = v;
      best = k;
    }
  }
  return Action{best};
}

// ---------------------------------------------------------------------------
// Potential

double log_potential_F(const ModelView& view, const StageParams& params, std::span<const MeanOutcome> history) {
  const double eps = params.epsilon, gamma = params.gamma, delta = params.delta;
  const double log1p_eps = std::log1p(eps);
  const int L = params.length;
  const int s = static_cast<int>(history.size());
  std::vector<double> terms;

  for (std::size_t i = 0; i < view.resource_count(); ++i) {
    const auto& surv = view.survival(i);
    const int support = surv.support();
    const double c = view.capacity(i), d = view.mean_duration(i);
    const double kappa = d > 0.0 ? eps * gamma / (d * (1.0 + eps)) : 0.0;
    for (int t = std::max(s, 1); t <= L; ++t) {
      double used = 0.0;
      for (int tau = std::max(1, t - support + 1); tau <= std::min(s, t); ++tau)
        used += history[static_cast<std::size_t>(tau - 1)].consumption[i] * surv(t - tau + 1);
      double relief = 0.0;
      for (int tau = std::max(s + 1, t - support + 1); tau <= t; ++tau) relief += std::log1p(kappa * surv(t - tau + 1));
      terms.push_back((delta - gamma) * log1p_eps + log1p_eps * gamma / c * used + relief);
    }
  }

  const double w = view.w_max(), ez = params.eps_z, lam = params.lambda;
  const double log_ez = std::log1p(-ez), decay = std::log1p(-ez * lam / (w * (1.0 + eps)));
  for (std::size_t i = 0; i < view.reward_count(); ++i) {
    double earned = 0.0;
    for (const auto& m : history) earned += m.reward[i];
    terms.push_back(log_ez * earned / w + (L - s) * decay - (1.0 - ez) * L * lam / w * log_ez);
  }

  if (terms.empty()) return -std::numeric_limits<double>::infinity();
  const double M = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double v : terms) acc += std::exp(v - M);
  return M + std::log(acc);
}

double potential_F(const ModelView& view, const StageParams& params, std::span<const MeanOutcome> history) {
  return std::exp(log_potential_F(view, params, history));
}

// ---------------------------------------------------------------------------
// Adaptive rule

AdaptivePolicy::AdaptivePolicy(const ModelView& view, const AlgoConfig& cfg, AdaptiveOptions opts)
    : view_(&view), cfg_(cfg), opts_(opts) {
  schedule_ = cfg.relaxed_schedule ? relaxed_stage_schedule(view.horizon(), cfg.epsilon)
                                   : stage_schedule(view.horizon(), cfg.epsilon);
}

std::size_t AdaptivePolicy::stage_of(int t) const {
  std::size_t idx = 0;
  while (idx + 1 < schedule_.size() && t > schedule_[idx + 1].offset) ++idx;
  return idx;
}

void AdaptivePolicy::begin_episode(std::uint64_t seed) {
  rng_ = make_stream(seed, Stream::policy_adaptive);
  saa_rng_ = make_stream(seed, Stream::saa);
  stage_ = 0;
  started_ = false;
  fallback_ = true;
  counts_.assign(view_->customer_count(), 0);
  prev_counts_.assign(view_->customer_count(), 0);
  weights_.reset();
  lp_solves_ = 0;
  records_.clear();
  snapshots_.clear();
}

void AdaptivePolicy::start_stage(std::size_t idx) {
  stage_ = idx;
  started_ = true;
  prev_counts_ = counts_;
  std::fill(counts_.begin(), counts_.end(), 0);
  weights_.reset();
  fallback_ = true;
  const Stage& st = schedule_[idx];

  StageRecord rec;
  rec.params.index = st.index;
  rec.params.offset = st.offset;
  rec.params.length = st.length;
  rec.params.epsilon = cfg_.epsilon;
  rec.params.gamma = cfg_.gamma;
  rec.params.delta = cfg_.delta;
  rec.fallback = true;

  if (st.index >= 0) {
    auto p_hat = empirical_distribution(prev_counts_);
    if (opts_.saa_samples > 0) p_hat = saa_subsample(p_hat, opts_.saa_samples, saa_rng_);
    const std::size_t card_I = view_->resource_count() + view_->reward_count();
    const double eta = cfg_.effective_eta();
    const int l = static_cast<int>(schedule_.size()) - 1;
    const double ex = eps_x(view_->horizon(), schedule_[idx - 1].length, cfg_.gamma, card_I, eta);
    rec.params.eps_x_prev = ex;
    try {
      ++lp_solves_;
      const auto est = solve_lambda_r(*view_, p_hat, ex);
      rec.mu_star = est.mu_star;
      rec.params.lambda = est.lambda_r;
      rec.params.eps_z = eps_z(st.length, est.lambda_r, view_->w_max(), cfg_.epsilon, card_I, l, eta);
      weights_.emplace(*view_, rec.params);
      fallback_ = false;
      rec.fallback = false;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateStage) throw;
      log::warning_once("degenerate-stage", std::string("stage ") + std::to_string(st.index) +
                                                ": " + e.what() + "; serving the stage with uniform random actions");
    }
  }
  if (opts_.record) records_.push_back(std::move(rec));
}

void AdaptivePolicy::snapshot(int t) {
  WeightSnapshot snap;
  snap.t = t;
  snap.stage = schedule_[stage_].index;
  if (weights_) {
    const auto& p = weights_->params();
    snap.step = weights_->step();
    snap.lambda = p.lambda;
    snap.eps_x_prev = p.eps_x_prev;
    snap.eps_z = p.eps_z;
    for (std::size_t i = 0; i < view_->resource_count(); ++i) {
      std::vector<double> row;
      for (int u = snap.step; u <= p.length; ++u) row.push_back(weights_->log_phi(i, u));
      snap.log_phi.push_back(std::move(row));
    }
    for (std::size_t i = 0; i < view_->reward_count(); ++i) snap.log_psi.push_back(weights_->log_psi(i));
  }
  snapshots_.push_back(std::move(snap));
}

Action AdaptivePolicy::decide(int t, std::size_t j) {
  const std::size_t idx = stage_of(t);
  if (!started_ || idx != stage_) {
    start_stage(idx);
    if (opts_.record) snapshot(t);
  }
  ++counts_[j];
  const Stage& st = schedule_[stage_];
  const int s = t - st.offset;

  Action k;
  if (fallback_) {
    k = view_->uniform_action(rng_);
  } else if (opts_.drain_stage_ends && s > st.length - cfg_.dbar) {
    k = view_->null_action();
  } else {
    k = select_action(*weights_, *view_, j);
  }

  if (weights_ || opts_.record) {
    const MeanOutcome m = view_->mean_outcome(j, k);
    if (weights_) weights_->update(m);
    if (opts_.record) records_.back().chosen.push_back(m);
  }
  return k;
}

// ---------------------------------------------------------------------------
// Hybrid

HybridPolicy::HybridPolicy(const ModelView& view, const SteadyStateSolution& x_star, const AlgoConfig& cfg,
                           int s_switch, AdaptiveOptions opts)
    : adaptive_(view, cfg, opts), static_(view, x_star, cfg.epsilon), s_switch_(s_switch) {}

void HybridPolicy::begin_episode(std::uint64_t seed) {
  adaptive_.begin_episode(seed);
  static_.begin_episode(seed);
}

Action HybridPolicy::decide(int t, std::size_t j) {
  const Action a = adaptive_.decide(t, j);
  const Action b = static_.decide(t, j);
  const int s = t - adaptive_.schedule()[adaptive_.stage_of(t)].offset;
  return s <= s_switch_ ? a : b;
}

void HybridPolicy::observe(const StepOutcome& step) {
  adaptive_.observe(step);
  static_.observe(step);
}

void write_snapshots_json(const AdaptivePolicy& policy, std::ostream& os) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : policy.snapshots()) {
    arr.push_back({{"t", s.t},
                   {"stage", s.stage},
                   {"step", s.step},
                   {"lambda", s.lambda},
                   {"eps_x_prev", s.eps_x_prev},
                   {"eps_z", s.eps_z},
                   {"log_phi", s.log_phi},
                   {"log_psi", s.log_psi}});
  }
  os << arr.dump(1) << '\n';
}

}  // namespace reusable
