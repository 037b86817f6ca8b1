// cascade simulate|ctmc|stability|sweep <scenario.json> [flags]
//
// Seed precedence: --seed, then CASCADE_SEED, then the scenario file.
#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include "CLI11.hpp"
#include "cascade/scenario.hpp"
#include "cascade/simulator.hpp"

namespace {

std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv("CASCADE_SEED");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (*end != '\0' || v[0] == '-') throw cascade::ValidationError("CASCADE_SEED must be a nonnegative integer");
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold-overflow cascade simulator and stability tools"};
  app.require_subcommand(1);

  std::string file;
  cascade::Overrides cli;
  std::string out;
  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "replicated simulation with per-station metrics"},
      {"ctmc", "stationary law of the truncated two-station chain"},
      {"stability", "stability classification by backward induction"},
      {"sweep", "verdict and drift across one parameter"},
  };
  for (const auto& [name, description] : commands) {
    auto* sub = app.add_subcommand(name, description);
    sub->add_option("file", file, "scenario file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", cli.seed, "master seed");
    sub->add_option("--horizon", cli.horizon, "simulated time per replication");
    sub->add_option("--reps", cli.replications, "replications");
    sub->add_option("--out", out, "output root directory");
    sub->add_option("--event-cap", cli.event_cap, "maximum events per replication");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    auto scenario = cascade::load_scenario(file);
    const std::string model(cascade::to_string(scenario.model));
    if (model != command) {
      std::cerr << "error: " << file << " declares model '" << model << "', not '" << command << "'\n";
      return cascade::exit_fault;
    }
    if (!cli.seed) cli.seed = seed_from_env();
    if (!out.empty()) cli.output_dir = out;
    cascade::apply_overrides(scenario, cli);
    return cascade::run_experiment(scenario, std::cout);
  } catch (const cascade::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
  } catch (const cascade::InternalFault& e) {
    std::cerr << "internal fault: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return cascade::exit_fault;
}
