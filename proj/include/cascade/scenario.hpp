#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cascade/config.hpp"
#include "cascade/record.hpp"

namespace cascade {

enum class Model { simulate, ctmc, stability, sweep };
std::string_view to_string(Model m);

struct SweepAxis {
  std::string parameter;  // e.g. "stations[0].arrival.rate"
  std::vector<double> values;
};

/// One experiment as described by a scenario file.
struct Scenario {
  std::string name;
  Model model = Model::simulate;
  SystemConfig system;
  double horizon = 1e5;
  int replications = 1;
  double warmup = 0.1;
  int batches = 32;
  std::uint64_t event_cap = std::numeric_limits<std::uint64_t>::max();
  unsigned threads = 0;
  double margin = 0.02;
  RecordLayout layout;
  std::int64_t tight_level = 0;  // level of the tight_l0 column
  bool event_log = false;
  bool cross_check = false;  // stability model: also run the full-system drift simulation
  int truncation = 200;      // ctmc model
  std::optional<SweepAxis> sweep;
  std::filesystem::path output_dir = "out";

  std::vector<std::string> warnings;  // admissibility notes collected while loading
  std::string canonical;              // normalized scenario text, input to the run id
};

/// Parses and validates a scenario. Throws ValidationError listing every
/// violation, or naming line and column on malformed input.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Command-line and environment overrides, applied after loading.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon;
  std::optional<int> replications;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> event_cap;
};
void apply_overrides(Scenario& scenario, const Overrides& overrides);

/// Sets a sweepable parameter: stations[i].{arrival,service,overflow_service}.{rate,mean}
/// or stations[i].threshold.
void set_parameter(SystemConfig& config, std::string_view path, double value);

/// Hex content hash of the canonical scenario text.
std::string run_id(const Scenario& scenario);

enum ExitCode : int { exit_success = 0, exit_fault = 1, exit_boundary = 2, exit_truncated = 3 };

/// Runs the scenario, writing artifacts under output_dir/name/run_id and a
/// human-readable summary to `log`. Returns one of ExitCode.
int run_experiment(const Scenario& scenario, std::ostream& log);

/// Directory run_experiment writes into.
std::filesystem::path output_path(const Scenario& scenario);

}  // namespace cascade
