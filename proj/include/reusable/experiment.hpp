#pragma once

// Experiment harness: synthetic assortment instances, benchmark solves,
// seeded replications and the CSV summary.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reusable/benchmarks.hpp"
#include "reusable/model.hpp"
#include "reusable/policy.hpp"

namespace reusable {

/// Recipe for a synthetic MNL instance at scale n:
///   T = horizon_per_scale * n, c_i = capacity_per_scale * n;
///   product features f_i ~ U[-1, 1]^m, prices r_i = 1 + U[0, 1);
///   customer features b_ij ~ U[-b_range, b_range]^m;
///   type 0 is the null type with weight null_weight, the rest share the
///   remaining mass in proportion to U[0.1, 1);
///   D_i = n * B_i - U{0..n-1} with B_i drawn from a random pmf on
///   {1..duration_base} (weights U[0, 1)), so d_UB = duration_base * n.
/// Every draw other than the scale comes from the seed, so instances at
/// different n share features, prices, weights and duration shapes.
struct GeneratorSpec {
  std::size_t resources = 4;
  std::size_t customers = 20;  // including the null type
  std::size_t max_size = 2;
  std::size_t feature_dim = 3;
  int n_scale = 1;
  int horizon_per_scale = 1000;
  double capacity_per_scale = 20.0;
  int duration_base = 200;
  double null_weight = 0.1;
  double b_range = 0.5;
};

/// Throws Error{InvalidConfig} for inconsistent specs.
Instance generate_instance(const GeneratorSpec& spec, std::uint64_t seed);

struct Benchmarks {
  double lambda_ss = 0.0;  // steady-state optimum
  double ub = 0.0;         // T * lambda_ss
  SteadyStateSolution x_star;
  double gamma = 0.0;
  int dbar = 1;
  std::optional<double> lambda_e;  // time-indexed optimum when it fits the cap
};

/// lp_e_cap = 0 skips the time-indexed LP.
Benchmarks solve_benchmarks(const Instance& inst, double delta = 0.0, std::size_t lp_e_cap = 20000);

struct ExperimentConfig {
  std::string instance_path;                // used when set
  std::optional<GeneratorSpec> generator;   // otherwise
  std::uint64_t generator_seed = 1;
  std::vector<std::string> policies = {"static", "adaptive"};
  std::size_t reps = 10;
  std::uint64_t seed = 0;
  std::string out;  // CSV path; empty = none
  double epsilon = 0.25;
  double eta = 0.0;
  double delta = 0.0;
  std::optional<double> gamma;  // default: computed from the benchmark
  bool relaxed_schedule = false;
  std::size_t saa_samples = 0;
  bool drain_stage_ends = false;
  std::size_t threads = 0;  // 0 = hardware concurrency
  bool timing = false;      // fill the seconds column
  std::vector<int> scales;  // trend only
};

/// Reads the JSON config layout documented in the README.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::string& path);

AlgoConfig algo_config(const ExperimentConfig& cfg, const Benchmarks& bench);

/// "static", "adaptive", "hybrid(s)", "random", "always-null".
std::unique_ptr<Policy> make_policy(const std::string& name, const ModelView& view, const Benchmarks& bench,
                                    const AlgoConfig& algo, const AdaptiveOptions& opts = {});

struct SummaryRow {
  int T = 0;
  double epsilon = 0.0;
  double ub = 0.0;
  std::string policy;
  double mean = 0.0;
  double std = 0.0;
  double gap_pct = 0.0;
  double forced_rejects = 0.0;  // mean fraction of steps forced to null
  std::optional<double> seconds;
  std::optional<double> ub_saa;
  std::vector<double> scores;   // per replication, seed order
};

struct ExperimentResult {
  Benchmarks benchmarks;
  std::vector<SummaryRow> rows;
};

/// Scores of R replications with seeds base+1..base+R, folded in seed order.
std::vector<EpisodeTrace> run_replications(const Instance& inst,
                                           const std::function<std::unique_ptr<Policy>()>& factory,
                                           std::uint64_t base_seed, std::size_t reps, std::size_t threads);

Instance load_or_generate(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Instance& inst);

void write_csv(const std::vector<SummaryRow>& rows, std::ostream& os);
std::string csv_string(const std::vector<SummaryRow>& rows);

struct TrendPoint {
  int n_scale = 0;
  std::vector<SummaryRow> rows;
};

struct TrendReport {
  std::vector<TrendPoint> points;
  bool adaptive_strictly_decreasing = false;
  bool static_within_adaptive = false;  // static gap <= adaptive gap at every scale
  std::vector<std::string> flags;        // increases larger than the noise band
};

/// Runs the generator at every scale in cfg.scales (at least three).
TrendReport trend_report(const ExperimentConfig& cfg);
void write_trend(const TrendReport& report, std::ostream& os);

}  // namespace reusable
