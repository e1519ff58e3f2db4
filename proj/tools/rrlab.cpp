// rrlab: command-line front end for the reusable-resource allocation lab.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "reusable/benchmarks.hpp"
#include "reusable/error.hpp"
#include "reusable/experiment.hpp"
#include "reusable/instance_json.hpp"
#include "reusable/logging.hpp"
#include "reusable/policy.hpp"
#include "reusable/sim.hpp"

using namespace reusable;

namespace {

constexpr int kValidationFailure = 2;

struct Options {
  std::string instance;
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t reps = 0;
  std::vector<std::string> policies;
  std::string out;
  std::size_t saa_sample = 0;
  bool relaxed = false;
  std::string dump_trace;
  std::string dump_weights;
  std::string dump_lp;
  double epsilon = 0.0;
  int n_scale = 0;
  bool timing = false;
  bool quiet = false;
};

ExperimentConfig make_config(const Options& o) {
  ExperimentConfig cfg;
  if (!o.config.empty()) cfg = load_experiment_config(o.config);
  if (!o.instance.empty()) {
    cfg.instance_path = o.instance;
    cfg.generator.reset();
  }
  if (o.seed_set) cfg.seed = o.seed;
  if (o.reps > 0) cfg.reps = o.reps;
  if (!o.policies.empty()) cfg.policies = o.policies;
  if (!o.out.empty()) cfg.out = o.out;
  if (o.saa_sample > 0) cfg.saa_samples = o.saa_sample;
  if (o.relaxed) cfg.relaxed_schedule = true;
  if (o.epsilon > 0.0) cfg.epsilon = o.epsilon;
  if (o.timing) cfg.timing = true;
  if (o.n_scale > 0 && cfg.generator) cfg.generator->n_scale = o.n_scale;
  return cfg;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int cmd_validate(const Options& o) {
  const ExperimentConfig cfg = make_config(o);
  const Instance inst = load_or_generate(cfg);
  const auto violations = validate_instance(inst);
  for (const auto& v : violations) std::cout << v.path << ": " << v.message << '\n';
  if (!violations.empty()) return kValidationFailure;
  if (!o.config.empty()) {
    const auto bench = solve_benchmarks(inst, cfg.delta, 0);
    const auto cv = validate_config(algo_config(cfg, bench), inst.horizon);
    for (const auto& v : cv) std::cout << "config." << v.path << ": " << v.message << '\n';
    if (!cv.empty()) return kValidationFailure;
  }
  std::cout << "valid\n";
  return 0;
}

int cmd_solve(const Options& o) {
  const ExperimentConfig cfg = make_config(o);
  const Instance inst = load_or_generate(cfg);
  const auto violations = validate_instance(inst);
  for (const auto& v : violations) std::cerr << v.path << ": " << v.message << '\n';
  if (!violations.empty()) return kValidationFailure;
  const auto bench = solve_benchmarks(inst, cfg.delta);
  nlohmann::json doc = {{"T", inst.horizon},     {"lambda_ss", bench.lambda_ss}, {"UB", bench.ub},
                        {"gamma", bench.gamma},  {"dbar", bench.dbar},           {"colgen_rounds", bench.x_star.rounds}};
  if (bench.lambda_e) doc["lambda_e"] = *bench.lambda_e;
  nlohmann::json x = nlohmann::json::array();
  for (std::size_t c = 0; c < bench.x_star.columns.size(); ++c) {
    if (bench.x_star.x[c] <= 0.0) continue;
    const auto& col = bench.x_star.columns[c];
    x.push_back({{"customer", col.customer}, {"action", inst.action_label(col.action)}, {"x", bench.x_star.x[c]}});
  }
  doc["x"] = x;
  if (!o.dump_lp.empty()) {
    const ModelView view(inst);
    write_or_print(o.dump_lp, lp::dump(build_lp_ss(view, inst.arrival_weights(), bench.x_star.columns)));
  }
  write_or_print(o.out, doc.dump(1) + "\n");
  return 0;
}

int cmd_simulate(const Options& o) {
  ExperimentConfig cfg = make_config(o);
  const Instance inst = load_or_generate(cfg);
  const auto violations = validate_instance(inst);
  for (const auto& v : violations) std::cerr << v.path << ": " << v.message << '\n';
  if (!violations.empty()) return kValidationFailure;
  const auto bench = solve_benchmarks(inst, cfg.delta, 0);
  const ModelView view(inst);
  const AlgoConfig algo = algo_config(cfg, bench);
  AdaptiveOptions opts;
  opts.saa_samples = cfg.saa_samples;
  opts.drain_stage_ends = cfg.drain_stage_ends;
  opts.record = !o.dump_weights.empty();
  const std::string name = cfg.policies.empty() ? "adaptive" : cfg.policies.front();
  auto policy = make_policy(name, view, bench, algo, opts);
  EpisodeOptions eo;
  eo.keep_steps = !o.dump_trace.empty();
  const auto trace = run_episode(inst, *policy, cfg.seed, eo);

  if (!o.dump_trace.empty()) {
    std::ofstream out(o.dump_trace);
    if (!out) throw std::runtime_error("cannot write " + o.dump_trace);
    write_trace_jsonl(inst, trace, out);
  }
  if (!o.dump_weights.empty()) {
    const AdaptivePolicy* ap = dynamic_cast<const AdaptivePolicy*>(policy.get());
    if (const auto* hp = dynamic_cast<const HybridPolicy*>(policy.get())) ap = &hp->adaptive();
    if (!ap) throw Error(ErrorCode::InvalidConfig, "--dump-weights needs an adaptive or hybrid policy");
    std::ofstream out(o.dump_weights);
    if (!out) throw std::runtime_error("cannot write " + o.dump_weights);
    write_snapshots_json(*ap, out);
  }
  nlohmann::json doc = {{"policy", policy->name()},
                        {"seed", cfg.seed},
                        {"min_reward", trace.min_reward()},
                        {"totals", trace.totals},
                        {"forced_rejections", trace.forced_rejections},
                        {"UB", bench.ub}};
  write_or_print(o.out, doc.dump(1) + "\n");
  return 0;
}

int cmd_experiment(const Options& o) {
  const ExperimentConfig cfg = make_config(o);
  const auto res = run_experiment(cfg);
  const std::string csv = csv_string(res.rows);
  if (!cfg.out.empty()) write_or_print(cfg.out, csv);
  else std::cout << csv;
  return 0;
}

int cmd_trend(const Options& o) {
  const ExperimentConfig cfg = make_config(o);
  const auto rep = trend_report(cfg);
  std::ostringstream os;
  write_trend(rep, os);
  write_or_print(cfg.out, os.str());
  std::cerr << "adaptive gap strictly decreasing: " << (rep.adaptive_strictly_decreasing ? "yes" : "no") << '\n'
            << "static gap <= adaptive gap at every scale: " << (rep.static_within_adaptive ? "yes" : "no") << '\n';
  for (const auto& f : rep.flags) std::cerr << "flag: " << f << '\n';
  return 0;
}

int cmd_generate(const Options& o) {
  ExperimentConfig cfg = make_config(o);
  if (!cfg.generator) cfg.generator = GeneratorSpec{};
  if (o.n_scale > 0) cfg.generator->n_scale = o.n_scale;
  const std::uint64_t seed = o.seed_set ? o.seed : cfg.generator_seed;
  const Instance inst = generate_instance(*cfg.generator, seed);
  write_or_print(o.out, instance_to_string(inst));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online allocation of reusable resources: simulator, policies, LP benchmarks"};
  app.require_subcommand(1);
  Options o;
  app.add_flag("-q,--quiet", o.quiet, "Suppress informational messages");
  app.fallthrough();

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--instance", o.instance, "Instance JSON file");
    sub->add_option("--config", o.config, "Experiment config JSON file");
    sub->add_option("--seed", o.seed, "Episode or base seed")->each([&](const std::string&) { o.seed_set = true; });
    sub->add_option("--out", o.out, "Output path (default stdout)");
  };
  auto add_run = [&](CLI::App* sub) {
    sub->add_option("--reps", o.reps, "Replications");
    sub->add_option("--policy", o.policies, "static | adaptive | hybrid(s) | random | always-null")->delimiter(',');
    sub->add_option("--saa-sample", o.saa_sample, "Draws used for stage LPs (sample average approximation)");
    sub->add_flag("--relaxed-schedule", o.relaxed, "Accept any epsilon in (0, 1/2] by rounding stage lengths");
    sub->add_option("--epsilon", o.epsilon, "Override epsilon");
  };

  auto* validate = app.add_subcommand("validate", "Check an instance (and config) against every invariant");
  add_common(validate);
  auto* solve = app.add_subcommand("solve-benchmark", "Solve the steady-state and time-indexed LPs");
  add_common(solve);
  solve->add_option("--dump-lp", o.dump_lp, "Write the steady-state LP in plain-text layout");
  auto* simulate = app.add_subcommand("simulate", "Run one episode");
  add_common(simulate);
  add_run(simulate);
  simulate->add_option("--dump-trace", o.dump_trace, "Write the episode as JSON lines");
  simulate->add_option("--dump-weights", o.dump_weights, "Write adaptive weight snapshots as JSON");
  auto* experiment = app.add_subcommand("experiment", "Seeded replications and the CSV summary");
  add_common(experiment);
  add_run(experiment);
  experiment->add_flag("--timing", o.timing, "Fill the seconds column with wall time");
  auto* trend = app.add_subcommand("trend", "Gap-versus-scale table over the generator's scales");
  add_common(trend);
  add_run(trend);
  auto* generate = app.add_subcommand("generate", "Write a synthetic assortment instance");
  add_common(generate);
  generate->add_option("--n-scale", o.n_scale, "Scale factor n (T = 1000 n, c = 20 n)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  if (o.quiet) log::set_level(log::Level::Quiet);

  try {
    if (*validate) return cmd_validate(o);
    if (*solve) return cmd_solve(o);
    if (*simulate) return cmd_simulate(o);
    if (*experiment) return cmd_experiment(o);
    if (*trend) return cmd_trend(o);
    if (*generate) return cmd_generate(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    const bool validation = e.code() == ErrorCode::InvalidInstance || e.code() == ErrorCode::InvalidConfig ||
                            e.code() == ErrorCode::BadEpsilon;
    return validation ? kValidationFailure : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
