#include "cascade/replicate.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

namespace cascade {

SystemConfig replication_config(const SystemConfig& config, int replication) {
  SystemConfig c = config;
  c.seed = derive_seed(config.seed, static_cast<std::uint64_t>(replication));
  return c;
}

std::vector<TrajectoryRecord> run_replications(const SystemConfig& config, double horizon, int replications,
                                               const RunOptions& options, unsigned threads) {
  if (replications < 1) throw ValidationError("replications: must be >= 1");
  config.validate();
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(replications));

  std::vector<TrajectoryRecord> out(replications);
  std::vector<std::exception_ptr> errors(replications);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < replications; r = next++) {
      try {
        out[r] = run(replication_config(config, r), horizon, {}, options);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace cascade
