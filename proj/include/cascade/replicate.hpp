#pragma once

#include <vector>

#include "cascade/config.hpp"
#include "cascade/simulator.hpp"

namespace cascade {

/// Runs independent replications on a bounded worker pool. Replication r
/// uses seed derive_seed(config.seed, r); results are returned in
/// replication order, so the output does not depend on scheduling.
/// `threads` = 0 selects the hardware concurrency.
std::vector<TrajectoryRecord> run_replications(const SystemConfig& config, double horizon, int replications,
                                               const RunOptions& options = {}, unsigned threads = 0);

/// Seed-adjusted copy of `config` for replication r.
SystemConfig replication_config(const SystemConfig& config, int replication);

}  // namespace cascade
