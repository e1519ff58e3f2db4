#include "reusable/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "reusable/error.hpp"
#include "reusable/instance_json.hpp"
#include "reusable/logging.hpp"

namespace reusable {

// ---------------------------------------------------------------------------
// Generator

Instance generate_instance(const GeneratorSpec& spec, std::uint64_t seed) {
  if (spec.resources < 1 || spec.resources > mnl::kMaxProducts)
    throw Error(ErrorCode::InvalidConfig, "generator needs 1..63 resources");
  if (spec.customers < 2) throw Error(ErrorCode::InvalidConfig, "generator needs the null type and one more");
  if (spec.max_size < 1) throw Error(ErrorCode::InvalidConfig, "assortment size limit must be >= 1");
  if (spec.n_scale < 1 || spec.horizon_per_scale < 1 || spec.duration_base < 1 || !(spec.capacity_per_scale > 0.0))
    throw Error(ErrorCode::InvalidConfig, "scale, horizon, capacity and duration bound must be positive");
  if (!(spec.null_weight >= 0.0 && spec.null_weight < 1.0))
    throw Error(ErrorCode::InvalidConfig, "null weight must lie in [0, 1)");

  Rng rng = make_stream(seed, Stream::generator);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * uniform01(rng); };
  const std::size_t C = spec.resources, J = spec.customers, m = spec.feature_dim;
  const int n = spec.n_scale;

  std::vector<mnl::Product> products(C);
  for (auto& p : products) {
    p.features.resize(m);
    for (auto& f : p.features) f = uni(-1.0, 1.0);
    p.price = 1.0 + uniform01(rng);
  }

  std::vector<mnl::CustomerFeatures> features(J);
  std::vector<double> weights(J, 0.0);
  double raw_total = 0.0;
  for (std::size_t j = 1; j < J; ++j) {
    weights[j] = uni(0.1, 1.0);
    raw_total += weights[j];
    features[j].per_product.assign(C, std::vector<double>(m));
    for (auto& b : features[j].per_product)
      for (auto& v : b) v = uni(-spec.b_range, spec.b_range);
  }
  weights[0] = spec.null_weight;
  for (std::size_t j = 1; j < J; ++j) weights[j] *= (1.0 - spec.null_weight) / raw_total;

  Instance inst;
  inst.horizon = spec.horizon_per_scale * n;
  inst.reward_count = C;
  inst.null_customer = 0;
  const int base = spec.duration_base;
  for (std::size_t i = 0; i < C; ++i) {
    std::vector<double> base_pmf(static_cast<std::size_t>(base));
    for (auto& w : base_pmf) w = uniform01(rng);
    const double total = std::accumulate(base_pmf.begin(), base_pmf.end(), 0.0);
    std::vector<double> pmf(static_cast<std::size_t>(base * n) + 1, 0.0);
    for (int d = 1; d <= base * n; ++d)
      pmf[static_cast<std::size_t>(d)] = base_pmf[static_cast<std::size_t>((d + n - 1) / n - 1)] / (total * n);
    ResourceSpec r;
    r.capacity = spec.capacity_per_scale * n;
    r.unit_price = products[i].price;
    r.survival = SurvivalCurve::from_pmf(pmf).truncated(inst.horizon);
    inst.resources.push_back(std::move(r));
  }
  for (std::size_t j = 0; j < J; ++j) inst.customers.push_back({weights[j], {}});
  inst.actions = mnl::MnlModel(m, spec.max_size, std::move(products), std::move(features));
  return inst;
}

// ---------------------------------------------------------------------------
// Benchmarks and configuration

Benchmarks solve_benchmarks(const Instance& inst, double delta, std::size_t lp_e_cap) {
  const ModelView view(inst);
  const auto p = inst.arrival_weights();
  Benchmarks b;
  b.x_star = solve_lp_ss(view, p);
  b.lambda_ss = b.x_star.lambda;
  b.ub = inst.horizon * b.lambda_ss;
  b.gamma = compute_gamma(inst, b.lambda_ss);
  b.dbar = dbar_for(inst, delta);
  try {
    b.lambda_e = solve_lp_e(view, p, lp_e_cap).lambda;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooLarge) throw;
  }
  return b;
}

namespace {

template <typename T>
void read_opt(const nlohmann::json& doc, const char* key, T& out) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string(key) + ": " + e.what());
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  static const std::vector<std::string> known = {
      "instance", "generator", "generator_seed", "policies", "reps", "seed", "out", "epsilon", "eta", "delta",
      "gamma", "relaxed_schedule", "saa_sample", "drain_stage_ends", "threads", "timing", "scales"};
  for (const auto& [key, value] : doc.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");

  ExperimentConfig cfg;
  read_opt(doc, "instance", cfg.instance_path);
  if (doc.contains("generator")) {
    const auto& g = doc.at("generator");
    GeneratorSpec spec;
    read_opt(g, "resources", spec.resources);
    read_opt(g, "customers", spec.customers);
    read_opt(g, "max_size", spec.max_size);
    read_opt(g, "feature_dim", spec.feature_dim);
    read_opt(g, "n_scale", spec.n_scale);
    read_opt(g, "horizon_per_scale", spec.horizon_per_scale);
    read_opt(g, "capacity_per_scale", spec.capacity_per_scale);
    read_opt(g, "duration_base", spec.duration_base);
    read_opt(g, "null_weight", spec.null_weight);
    read_opt(g, "b_range", spec.b_range);
    cfg.generator = spec;
  }
  read_opt(doc, "generator_seed", cfg.generator_seed);
  read_opt(doc, "policies", cfg.policies);
  read_opt(doc, "reps", cfg.reps);
  read_opt(doc, "seed", cfg.seed);
  read_opt(doc, "out", cfg.out);
  read_opt(doc, "epsilon", cfg.epsilon);
  read_opt(doc, "eta", cfg.eta);
  read_opt(doc, "delta", cfg.delta);
  if (doc.contains("gamma")) {
    double g = 0.0;
    read_opt(doc, "gamma", g);
    cfg.gamma = g;
  }
  read_opt(doc, "relaxed_schedule", cfg.relaxed_schedule);
  read_opt(doc, "saa_sample", cfg.saa_samples);
  read_opt(doc, "drain_stage_ends", cfg.drain_stage_ends);
  read_opt(doc, "threads", cfg.threads);
  read_opt(doc, "timing", cfg.timing);
  read_opt(doc, "scales", cfg.scales);
  if (cfg.reps < 1) throw Error(ErrorCode::InvalidConfig, "reps must be >= 1");
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
  }
  return parse_experiment_config(doc);
}

AlgoConfig algo_config(const ExperimentConfig& cfg, const Benchmarks& bench) {
  AlgoConfig a;
  a.epsilon = cfg.epsilon;
  a.gamma = cfg.gamma.value_or(bench.gamma);
  a.delta = cfg.delta;
  a.dbar = bench.dbar;
  a.eta = cfg.eta;
  a.seed = cfg.seed;
  a.relaxed_schedule = cfg.relaxed_schedule;
  return a;
}

std::unique_ptr<Policy> make_policy(const std::string& name, const ModelView& view, const Benchmarks& bench,
                                    const AlgoConfig& algo, const AdaptiveOptions& opts) {
  auto check_algo = [&] {
    const auto v = validate_config(algo, view.horizon());
    if (!v.empty()) throw Error(ErrorCode::InvalidConfig, v.front().path + ": " + v.front().message);
  };
  if (name == "static") return std::make_unique<StaticPolicy>(view, bench.x_star, algo.epsilon);
  if (name == "adaptive") {
    check_algo();
    return std::make_unique<AdaptivePolicy>(view, algo, opts);
  }
  if (name == "random") return std::make_unique<RandomPolicy>(view);
  if (name == "always-null" || name == "null") return std::make_unique<NullPolicy>(view);
  if (name.rfind("hybrid(", 0) == 0 && name.back() == ')') {
    check_algo();
    const std::string arg = name.substr(7, name.size() - 8);
    std::size_t used = 0;
    int s = 0;
    try {
      s = std::stoi(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != arg.size() || s < 0) throw Error(ErrorCode::InvalidConfig, "bad hybrid switch in '" + name + "'");
    return std::make_unique<HybridPolicy>(view, bench.x_star, algo, s, opts);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown policy '" + name + "'");
}

// ---------------------------------------------------------------------------
// Replications

std::vector<EpisodeTrace> run_replications(const Instance& inst,
                                           const std::function<std::unique_ptr<Policy>()>& factory,
                                           std::uint64_t base_seed, std::size_t reps, std::size_t threads) {
  std::vector<EpisodeTrace> traces(reps);
  std::vector<std::exception_ptr> errors(reps);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, reps);

  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&] {
    std::unique_ptr<Policy> policy;
    try {
      policy = factory();
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      for (auto& e : errors)
        if (!e) e = std::current_exception();
      return;
    }
    while (true) {
      std::size_t r;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= reps) return;
        r = next++;
      }
      try {
        traces[r] = run_episode(inst, *policy, base_seed + 1 + r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t r = 0; r < reps; ++r) {
    if (!errors[r]) continue;
    try {
      std::rethrow_exception(errors[r]);
    } catch (const Error& e) {
      throw Error(e.code(), "replication with seed " + std::to_string(base_seed + 1 + r) + " failed: " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::NumericalBreakdown,
                  "replication with seed " + std::to_string(base_seed + 1 + r) + " failed: " + e.what());
    }
  }
  return traces;
}

Instance load_or_generate(const ExperimentConfig& cfg) {
  if (!cfg.instance_path.empty()) return load_instance(cfg.instance_path);
  if (cfg.generator) return generate_instance(*cfg.generator, cfg.generator_seed);
  throw Error(ErrorCode::InvalidConfig, "config names neither an instance nor a generator");
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, load_or_generate(cfg)); }

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Instance& inst) {
  const auto violations = validate_instance(inst);
  if (!violations.empty())
    throw Error(ErrorCode::InvalidInstance, violations.front().path + ": " + violations.front().message);
  ExperimentResult res;
  res.benchmarks = solve_benchmarks(inst, cfg.delta, 0);  // the time-indexed LP is not reported here
  const auto& bench = res.benchmarks;
  const ModelView view(inst);
  const AlgoConfig algo = algo_config(cfg, bench);
  AdaptiveOptions opts;
  opts.saa_samples = cfg.saa_samples;
  opts.drain_stage_ends = cfg.drain_stage_ends;

  std::optional<double> ub_saa;
  if (cfg.saa_samples > 0) {
    Rng rng = make_stream(cfg.seed, Stream::saa);
    const auto p_saa = saa_subsample(inst.arrival_weights(), cfg.saa_samples, rng);
    ub_saa = inst.horizon * solve_lp_ss(view, p_saa).lambda;
  }

  for (const auto& name : cfg.policies) {
    auto probe = make_policy(name, view, bench, algo, opts);
    const auto start = std::chrono::steady_clock::now();
    const auto traces = run_replications(
        inst, [&] { return make_policy(name, view, bench, algo, opts); }, cfg.seed, cfg.reps, cfg.threads);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    SummaryRow row;
    row.T = inst.horizon;
    row.epsilon = cfg.epsilon;
    row.ub = bench.ub;
    row.policy = probe->name();
    double forced = 0.0;
    for (const auto& tr : traces) {
      row.scores.push_back(tr.min_reward());
      forced += static_cast<double>(tr.forced_rejections) / inst.horizon;
    }
    const double R = static_cast<double>(traces.size());
    row.mean = std::accumulate(row.scores.begin(), row.scores.end(), 0.0) / R;
    double ss = 0.0;
    for (double v : row.scores) ss += (v - row.mean) * (v - row.mean);
    row.std = traces.size() > 1 ? std::sqrt(ss / (R - 1.0)) : 0.0;
    row.gap_pct = bench.ub > 0.0 ? 100.0 * (bench.ub - row.mean) / bench.ub : 0.0;
    row.forced_rejects = forced / R;
    if (cfg.timing) row.seconds = elapsed;
    std::ostringstream os;
    os << row.policy << ": " << std::fixed << std::setprecision(3) << elapsed << " s";
    log::info(os.str());
    row.ub_saa = ub_saa;
    res.rows.push_back(std::move(row));
  }
  return res;
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(15) << v;
  return os.str();
}

}  // namespace

void write_csv(const std::vector<SummaryRow>& rows, std::ostream& os) {
  const bool saa = std::any_of(rows.begin(), rows.end(), [](const SummaryRow& r) { return r.ub_saa.has_value(); });
  os << "T,eps,UB,policy,mean,std,gap_pct,forced_rejects,seconds";
  if (saa) os << ",ub_saa";
  os << '\n';
  for (const auto& r : rows) {
    os << r.T << ',' << num(r.epsilon) << ',' << num(r.ub) << ',' << r.policy << ',' << num(r.mean) << ','
       << num(r.std) << ',' << num(r.gap_pct) << ',' << num(r.forced_rejects) << ',';
    if (r.seconds) os << num(*r.seconds);
    if (saa) os << ',' << (r.ub_saa ? num(*r.ub_saa) : "");
    os << '\n';
  }
}

std::string csv_string(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  write_csv(rows, os);
  return os.str();
}

// ---------------------------------------------------------------------------
// Trend

TrendReport trend_report(const ExperimentConfig& cfg) {
  if (cfg.scales.size() < 3) throw Error(ErrorCode::InvalidConfig, "trend needs at least three scales");
  if (!cfg.generator) throw Error(ErrorCode::InvalidConfig, "trend needs a generator spec");
  TrendReport rep;
  for (int n : cfg.scales) {
    GeneratorSpec spec = *cfg.generator;
    spec.n_scale = n;
    const Instance inst = generate_instance(spec, cfg.generator_seed);
    auto res = run_experiment(cfg, inst);
    rep.points.push_back({n, std::move(res.rows)});
  }

  auto find = [](const TrendPoint& p, const std::string& name) -> const SummaryRow* {
    for (const auto& r : p.rows)
      if (r.policy == name) return &r;
    return nullptr;
  };
  rep.adaptive_strictly_decreasing = true;
  rep.static_within_adaptive = true;
  for (std::size_t k = 0; k < rep.points.size(); ++k) {
    const auto* a = find(rep.points[k], "adaptive");
    const auto* s = find(rep.points[k], "static");
    if (!a) {
      rep.adaptive_strictly_decreasing = false;
    } else if (k > 0) {
      const auto* prev = find(rep.points[k - 1], "adaptive");
      if (prev && !(a->gap_pct < prev->gap_pct)) {
        rep.adaptive_strictly_decreasing = false;
        // Noise band: two standard errors of each gap estimate, combined.
        auto se = [](const SummaryRow& r) {
          return r.ub > 0.0 ? 100.0 * r.std / (r.ub * std::sqrt(static_cast<double>(r.scores.size()))) : 0.0;
        };
        const double band = 2.0 * std::hypot(se(*a), se(*prev));
        if (a->gap_pct - prev->gap_pct > band) {
          std::ostringstream os;
          os << "adaptive gap rises from " << prev->gap_pct << "% at n=" << rep.points[k - 1].n_scale << " to "
             << a->gap_pct << "% at n=" << rep.points[k].n_scale << " (noise band " << band << ")";
          rep.flags.push_back(os.str());
        }
      }
    }
    if (!a || !s || s->gap_pct > a->gap_pct) rep.static_within_adaptive = false;
  }
  return rep;
}

void write_trend(const TrendReport& report, std::ostream& os) {
  os << "n,T,UB,policy,mean,std,gap_pct\n";
  for (const auto& p : report.points)
    for (const auto& r : p.rows)
      os << p.n_scale << ',' << r.T << ',' << num(r.ub) << ',' << r.policy << ',' << num(r.mean) << ',' << num(r.std)
         << ',' << num(r.gap_pct) << '\n';
}

}  // namespace reusable
