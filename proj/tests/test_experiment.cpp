#include <doctest.h>

#include <chrono>
#include <sstream>

#include "fixtures.hpp"
#include "reusable/error.hpp"
#include "reusable/experiment.hpp"
#include "reusable/instance_json.hpp"

using namespace reusable;

namespace {

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == sep)
      out.emplace_back();
    else
      out.back() += c;
  }
  return out;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) out.push_back(split(line));
  return out;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  GeneratorSpec g;
  g.resources = 2;
  g.customers = 5;
  g.horizon_per_scale = 200;
  g.capacity_per_scale = 4.0;
  g.duration_base = 8;
  cfg.generator = g;
  cfg.policies = {"static", "adaptive", "random", "always-null"};
  cfg.reps = 4;
  cfg.seed = 11;
  cfg.epsilon = 0.25;
  return cfg;
}

}  // namespace

TEST_CASE("generator is deterministic and valid") {
  GeneratorSpec spec;
  const auto a = instance_to_string(generate_instance(spec, 5));
  const auto b = instance_to_string(generate_instance(spec, 5));
  CHECK(a == b);
  CHECK(a != instance_to_string(generate_instance(spec, 6)));
  CHECK(validate_instance(generate_instance(spec, 5)).empty());
  spec.n_scale = 2;
  const auto big = generate_instance(spec, 5);
  CHECK(validate_instance(big).empty());
  CHECK(big.horizon == 2000);
  CHECK(big.resources[0].capacity == 40.0);
  for (const auto& r : big.resources) CHECK(r.survival.support() <= 400);
}

TEST_CASE("generator with unit duration bound gives unit durations") {
  GeneratorSpec spec;
  spec.duration_base = 1;
  const auto inst = generate_instance(spec, 3);
  for (const auto& r : inst.resources) CHECK(r.survival.values().size() == 1);
  for (const auto& r : inst.resources) CHECK(r.survival(1) == doctest::Approx(1.0));
}

TEST_CASE("generator rejects inconsistent specs") {
  GeneratorSpec spec;
  spec.customers = 1;
  CHECK_THROWS_AS(generate_instance(spec, 1), Error);
  spec = {};
  spec.null_weight = 1.0;
  CHECK_THROWS_AS(generate_instance(spec, 1), Error);
}

TEST_CASE("desk instance solves quickly") {
  const auto inst = generate_instance(GeneratorSpec{}, 1);
  const auto start = std::chrono::steady_clock::now();
  const auto bench = solve_benchmarks(inst);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 5.0);
  CHECK(bench.ub > 0.0);
  CHECK(bench.ub == doctest::Approx(inst.horizon * bench.lambda_ss));
}

TEST_CASE("benchmarks on the toy and on zero capacity") {
  const auto toy = fixtures::toy_instance(20);
  const auto b = solve_benchmarks(toy);
  CHECK(b.ub == doctest::Approx(10.0));
  REQUIRE(b.lambda_e.has_value());
  CHECK(*b.lambda_e >= b.lambda_ss - 1e-12);

  auto zero = toy;
  zero.resources[0].capacity = 0.0;
  CHECK(solve_benchmarks(zero).ub == doctest::Approx(0.0));
}

TEST_CASE("always-null gets a full gap") {
  ExperimentConfig cfg;
  cfg.policies = {"always-null"};
  cfg.reps = 1;
  const auto res = run_experiment(cfg, fixtures::toy_instance(16));
  REQUIRE(res.rows.size() == 1);
  CHECK(res.rows[0].mean == 0.0);
  CHECK(res.rows[0].gap_pct == doctest::Approx(100.0));
  CHECK(res.rows[0].std == 0.0);
}

TEST_CASE("experiment CSV is deterministic and self-consistent") {
  const auto cfg = small_config();
  const auto a = csv_string(run_experiment(cfg).rows);
  auto threaded = cfg;
  threaded.threads = 3;
  const auto b = csv_string(run_experiment(threaded).rows);
  CHECK(a == b);

  const auto rows = csv_rows(a);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == split("T,eps,UB,policy,mean,std,gap_pct,forced_rejects,seconds"));
  const auto res = run_experiment(cfg);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    // Paired seeds: the shared columns agree across policies.
    CHECK(rows[r][0] == rows[1][0]);
    CHECK(rows[r][1] == rows[1][1]);
    CHECK(rows[r][2] == rows[1][2]);
    const double ub = std::stod(rows[r][2]), mean = std::stod(rows[r][4]), gap = std::stod(rows[r][6]);
    CHECK(ub == doctest::Approx(res.benchmarks.ub).epsilon(1e-12));
    CHECK(std::abs(ub - res.benchmarks.ub) <= 1e-9 * std::max(1.0, ub));
    CHECK(gap == doctest::Approx(100.0 * (ub - mean) / ub).epsilon(1e-9));
    CHECK(std::stod(rows[r][5]) >= 0.0);
    CHECK(rows[r][8].empty());
  }
  CHECK(rows[1][3] == "static");
  CHECK(rows[2][3] == "adaptive");
}

TEST_CASE("SAA column appears only when requested") {
  auto cfg = small_config();
  cfg.policies = {"static"};
  cfg.saa_samples = 50;
  const auto rows = csv_rows(csv_string(run_experiment(cfg).rows));
  CHECK(rows[0].back() == "ub_saa");
  CHECK(!rows[1].back().empty());
}

TEST_CASE("replications report the failing seed") {
  class Failing : public Policy {
   public:
    std::string name() const override { return "failing"; }
    void begin_episode(std::uint64_t seed) override { seed_ = seed; }
    Action decide(int t, std::size_t) override {
      if (seed_ == 13 && t == 2) throw Error(ErrorCode::NumericalBreakdown, "boom");
      return Action{0};
    }

   private:
    std::uint64_t seed_ = 0;
  };
  const auto inst = fixtures::toy_instance(4);
  try {
    (void)run_replications(inst, [] { return std::make_unique<Failing>(); }, 10, 5, 2);
    FAIL("expected a failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("seed 13") != std::string::npos);
  }
}

TEST_CASE("config parsing") {
  const auto cfg = parse_experiment_config(nlohmann::json::parse(
      R"js({"generator": {"resources": 3, "n_scale": 2}, "policies": ["static", "hybrid(3)"], "reps": 2,
          "seed": 4, "epsilon": 0.125, "gamma": 7.5, "scales": [1, 2, 4]})js"));
  REQUIRE(cfg.generator.has_value());
  CHECK(cfg.generator->resources == 3);
  CHECK(cfg.generator->n_scale == 2);
  CHECK(cfg.policies.size() == 2);
  CHECK(cfg.gamma == 7.5);
  CHECK(cfg.scales == std::vector<int>{1, 2, 4});
  CHECK_THROWS_AS(parse_experiment_config(nlohmann::json::parse(R"({"bogus": 1})")), Error);
  CHECK_THROWS_AS(parse_experiment_config(nlohmann::json::parse(R"({"reps": 0})")), Error);
  CHECK_THROWS_AS(parse_experiment_config(nlohmann::json::parse(R"({"reps": "x"})")), Error);
}

TEST_CASE("policy factory") {
  const auto inst = fixtures::toy_instance(8);
  const ModelView view(inst);
  const auto bench = solve_benchmarks(inst);
  ExperimentConfig cfg;
  const auto algo = algo_config(cfg, bench);
  CHECK(make_policy("hybrid(2)", view, bench, algo)->name() == "hybrid(2)");
  CHECK(make_policy("always-null", view, bench, algo)->name() == "always-null");
  CHECK_THROWS_AS(make_policy("hybrid(x)", view, bench, algo), Error);
  CHECK_THROWS_AS(make_policy("nope", view, bench, algo), Error);
  auto bad = algo;
  bad.epsilon = 0.3;
  CHECK_THROWS_AS(make_policy("adaptive", view, bench, bad), Error);
}

TEST_CASE("trend needs three scales") {
  auto cfg = small_config();
  cfg.scales = {1};
  CHECK_THROWS_AS(trend_report(cfg), Error);
}
