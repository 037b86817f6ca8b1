#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cascade/scenario.hpp"
#include "doctest.h"

using namespace cascade;
namespace fs = std::filesystem;

namespace {

std::string two_station_json(const std::string& extra, double lambda1 = 1.2, int threshold = 1,
                             const std::string& arrival1 = "") {
  const std::string a1 = arrival1.empty()
                             ? R"({"family": "exponential", "params": {"rate": )" + std::to_string(lambda1) + "}}"
                             : arrival1;
  return R"({
  "name": "t",
  )" + extra + R"(
  "stations": [
    {"arrival": )" + a1 + R"(,
     "service": {"family": "exponential", "params": {"rate": 1.0}},
     "threshold": )" + std::to_string(threshold) + R"(,
     "overflow_service": {"family": "exponential", "params": {"mean": 1.0}}},
    {"arrival": {"family": "exponential", "params": {"rate": 0.5}},
     "service": {"family": "exponential", "params": {"rate": 1.0}}}
  ]
})";
}

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("minimal file gets defaults") {
  const auto s = parse_scenario(two_station_json(""));
  CHECK(s.name == "t");
  CHECK(s.model == Model::simulate);
  CHECK(s.warmup == 0.1);
  CHECK(s.replications == 1);
  CHECK(s.batches == 32);
  CHECK(s.system.k() == 2);
  CHECK(s.system.threshold(0) == 1);
  CHECK(s.system.arrival_rate(0) == doctest::Approx(1.2));
  CHECK(s.system.overflow_rate(0) == 1.0);
  CHECK(s.warnings.empty());
}

TEST_CASE("threshold 0 is rejected") {
  CHECK(error_of(two_station_json("", 1.2, 0)).find("threshold must be >= 1") != std::string::npos);
}

TEST_CASE("deterministic arrivals load with a spread-out warning") {
  const auto s = parse_scenario(
      two_station_json("", 1.2, 1, R"({"family": "deterministic", "params": {"value": 0.8}})"));
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].find("spread-out") != std::string::npos);
  CHECK(s.warnings[0].find("stations[0].arrival") != std::string::npos);
}

TEST_CASE("malformed text reports line and column") {
  const auto e = error_of("{\n  \"name\": \"x\",\n  \"stations\": [,]\n}");
  CHECK(e.find("line 3") != std::string::npos);
  CHECK(e.find("column") != std::string::npos);
}

TEST_CASE("every violation is listed") {
  const auto e = error_of(two_station_json(R"("horizon": -1, "replications": 0, "colour": "red",)"));
  CHECK(e.find("scenario.horizon") != std::string::npos);
  CHECK(e.find("scenario.replications") != std::string::npos);
  CHECK(e.find("scenario.colour: unknown key") != std::string::npos);

  const auto f = error_of(R"({"name": "x", "stations": [{"arrival": {"family": "pareto"},
      "service": {"family": "erlang", "params": {"rate": 1}}}]})");
  CHECK(f.find("unknown family 'pareto'") != std::string::npos);
  CHECK(f.find("stations[0].service.params.shape") != std::string::npos);
}

TEST_CASE("sweep axis must name an existing parameter") {
  CHECK(error_of(two_station_json(R"("model": "sweep", "sweep": {"parameter": "stations[5].arrival.rate", "values": [1]},)"))
            .find("does not exist") != std::string::npos);
  CHECK(error_of(two_station_json(R"("model": "sweep", "sweep": {"parameter": "stations[1].overflow_service.rate", "values": [1]},)"))
            .find("does not exist") != std::string::npos);
  CHECK(error_of(two_station_json(R"("model": "sweep", "sweep": {"parameter": "stations[0].colour", "values": [1]},)"))
            .find("unknown parameter") != std::string::npos);
  CHECK(error_of(two_station_json(R"("model": "sweep",)")).find("required for model sweep") != std::string::npos);

  const auto s = parse_scenario(two_station_json(
      R"("model": "sweep", "sweep": {"parameter": "stations[0].arrival.rate", "from": 1.0, "to": 2.0, "step": 0.1},)"));
  REQUIRE(s.sweep.has_value());
  REQUIRE(s.sweep->values.size() == 11);
  CHECK(s.sweep->values[5] == 1.5);
  CHECK(s.sweep->values[7] == 1.7);
  CHECK(s.sweep->values[10] == 2.0);
}

TEST_CASE("set_parameter") {
  auto s = parse_scenario(two_station_json(""));
  set_parameter(s.system, "stations[0].arrival.rate", 1.7);
  CHECK(s.system.arrival_rate(0) == doctest::Approx(1.7));
  set_parameter(s.system, "stations[1].service.mean", 0.5);
  CHECK(s.system.service_rate(1) == doctest::Approx(2.0));
  set_parameter(s.system, "stations[0].threshold", 3);
  CHECK(s.system.threshold(0) == 3);
  CHECK_THROWS_AS(set_parameter(s.system, "stations[0].threshold", 0), ValidationError);
  CHECK_THROWS_AS(set_parameter(s.system, "stations[0].arrival.rate", -1), ValidationError);
}

TEST_CASE("ctmc scenarios need exponential laws") {
  CHECK(error_of(two_station_json(R"("model": "ctmc",)", 1.2, 1, R"({"family": "erlang", "params": {"shape": 2, "rate": 1.2}})"))
            .find("exponential") != std::string::npos);
}

TEST_CASE("run id follows the content, not the output directory") {
  auto a = parse_scenario(two_station_json(R"("seed": 5,)"));
  auto b = parse_scenario(two_station_json(R"("seed": 5, "output": "elsewhere",)"));
  CHECK(run_id(a) == run_id(b));
  Overrides o;
  o.seed = 6;
  apply_overrides(b, o);
  CHECK(run_id(a) != run_id(b));
  CHECK(b.system.seed == 6);
  o.seed = 5;
  apply_overrides(b, o);
  CHECK(run_id(a) == run_id(b));
}

TEST_CASE("simulate: one row per replication and station plus aggregate rows, byte-identical on rerun") {
  const fs::path root = fs::temp_directory_path() / "cascade_test_scenario";
  fs::remove_all(root);
  auto s = parse_scenario(two_station_json(R"("replications": 20, "horizon": 2000, "seed": 3, "event_log": true,)"));
  s.output_dir = root / "a";
  std::ostringstream log;
  CHECK(run_experiment(s, log) == exit_success);
  const auto dir = output_path(s);
  const auto metrics = slurp(dir / "metrics.csv");
  CHECK(metrics.rfind("replication,station,rho_star,ci,idle,drift,little_residual,overflow_slack,tight_l0\n", 0) == 0);
  CHECK(count_lines(metrics) == 1 + 20 * 2 + 2);
  CHECK(metrics.find("\nmean,1,") != std::string::npos);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(slurp(dir / "events.csv").rfind("seq,t,kind,station,Q1,Q2,Q12\n", 0) == 0);

  // Same scenario with a different worker count and output root.
  s.output_dir = root / "b";
  s.threads = 3;
  std::ostringstream log2;
  CHECK(run_experiment(s, log2) == exit_success);
  const auto dir2 = output_path(s);
  CHECK(slurp(dir2 / "metrics.csv") == metrics);
  CHECK(slurp(dir2 / "report.json") == slurp(dir / "report.json"));
  CHECK(slurp(dir2 / "events.csv") == slurp(dir / "events.csv"));
  fs::remove_all(root);
}

TEST_CASE("stability: boundary verdict exits with 2, clear verdicts with 0") {
  const fs::path root = fs::temp_directory_path() / "cascade_test_stability";
  fs::remove_all(root);
  auto at = parse_scenario(two_station_json(R"("model": "stability",)", 1.5));
  at.output_dir = root;
  std::ostringstream log;
  CHECK(run_experiment(at, log) == exit_boundary);
  CHECK(fs::exists(output_path(at) / "verdict.json"));
  CHECK(log.str().find("overall: boundary") != std::string::npos);

  auto below = parse_scenario(two_station_json(R"("model": "stability",)", 1.2));
  below.output_dir = root;
  CHECK(run_experiment(below, log) == exit_success);
  auto above = parse_scenario(two_station_json(R"("model": "stability",)", 1.8));
  above.output_dir = root;
  CHECK(run_experiment(above, log) == exit_success);
  CHECK(slurp(output_path(above) / "verdict.csv").find("unstable") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("sweep over lambda_1 flips across 1.5 and rho_tilde rises monotonically") {
  const fs::path root = fs::temp_directory_path() / "cascade_test_sweep";
  fs::remove_all(root);
  auto s = parse_scenario(two_station_json(
      R"("model": "sweep", "horizon": 2000, "replications": 2,
         "sweep": {"parameter": "stations[0].arrival.rate", "from": 1.0, "to": 2.0, "step": 0.1},)"));
  s.output_dir = root;
  std::ostringstream log;
  CHECK(run_experiment(s, log) == exit_success);
  std::istringstream csv(slurp(output_path(s) / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  double last = 0.0;
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    std::istringstream f(line);
    std::string value, rt, verdict;
    std::getline(f, value, ',');
    std::getline(f, rt, ',');
    std::getline(f, verdict, ',');
    const double v = std::stod(value), r = std::stod(rt);
    CHECK(r > last);
    last = r;
    if (v < 1.45) CHECK(verdict == "stable");
    if (v > 1.55) CHECK(verdict == "unstable");
  }
  CHECK(rows == 11);
  fs::remove_all(root);
}

TEST_CASE("ctmc writes marginals and the summary row") {
  const fs::path root = fs::temp_directory_path() / "cascade_test_ctmc";
  fs::remove_all(root);
  auto s = parse_scenario(two_station_json(R"("model": "ctmc", "truncation": 40,)"));
  s.output_dir = root;
  std::ostringstream log;
  CHECK(run_experiment(s, log) == exit_success);
  CHECK(count_lines(slurp(output_path(s) / "marginals.csv")) == 42);
  const auto summary = slurp(output_path(s) / "summary.csv");
  CHECK(summary.rfind("rho_star_1,p_q1_zero,p_q2_zero,", 0) == 0);
  fs::remove_all(root);
}

TEST_CASE("hitting the event cap exits with 3") {
  const fs::path root = fs::temp_directory_path() / "cascade_test_cap";
  fs::remove_all(root);
  auto s = parse_scenario(two_station_json(R"("horizon": 100000, "bin_width": 10, "batches": 4,)"));
  s.output_dir = root;
  Overrides o;
  o.event_cap = 5000;
  apply_overrides(s, o);
  std::ostringstream log;
  CHECK(run_experiment(s, log) == exit_truncated);
  CHECK(log.str().find("partial") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("shipped scenarios load") {
  const fs::path dir = fs::path(SCENARIO_DIR);
  int n = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    CHECK_NOTHROW(load_scenario(entry.path()));
    ++n;
  }
  CHECK(n >= 4);
}
