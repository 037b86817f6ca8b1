#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace cascade {

/// Resolution of the binned occupancy series kept in a TrajectoryRecord.
struct RecordLayout {
  std::size_t bins = 1024;  // bins across the run horizon, used when bin_width is 0
  double bin_width = 0.0;   // absolute width; set explicitly when records will be merged
  int level_cap = 32;       // queue lengths >= level_cap share the last slot
};

struct StationTotals {
  std::int64_t arrivals = 0;    // A_i
  std::int64_t departures = 0;  // D_i
  double busy = 0.0;            // B_i = int 1(Q_i > 0)
  double idle = 0.0;            // I_i = int 1(Q_i = 0)
  double below_threshold = 0.0; // K_i = int 1(Q_i <= c_i); zero for the last station
  double occupancy = 0.0;       // int Q_i
  std::int64_t initial_queue = 0;
  std::int64_t terminal_queue = 0;
  std::int64_t max_queue = 0;
};

/// Counters of class i|(i+1) on the link from station i to i+1.
struct LinkTotals {
  std::int64_t arrivals = 0;    // A_{i|(i+1)}: transfers
  std::int64_t departures = 0;  // D_{i|(i+1)}
  double served = 0.0;          // B_{i|(i+1)} = int 1(Q_{i|(i+1)} > 0, Q_{i+1} = 0)
  double saturated = 0.0;       // J_{i|(i+1)} = int 1(Q_i > c_i, Q_{i+1} = 0)
  int initial = 0;
  int terminal = 0;
};

/// Counting processes and time integrals along one sample path segment.
struct TrajectoryRecord {
  double start = 0.0;
  double end = 0.0;
  std::vector<StationTotals> stations;
  std::vector<LinkTotals> links;

  // Nominal rates of the simulated configuration.
  std::vector<double> arrival_rate;
  std::vector<double> service_rate;
  std::vector<double> overflow_rate;  // per link

  // level_time[i][b * (level_cap + 1) + q]: time in bin (first_bin + b) with
  // Q_i = q, q = level_cap meaning Q_i >= level_cap.
  double bin_width = 0.0;
  std::int64_t first_bin = 0;
  int level_cap = 0;
  std::vector<std::vector<double>> level_time;

  std::uint64_t events = 0;
  bool truncated = false;

  [[nodiscard]] int k() const { return static_cast<int>(stations.size()); }
  [[nodiscard]] double horizon() const { return end - start; }
  [[nodiscard]] std::size_t bin_count() const;
  [[nodiscard]] double level_time_at(int station, std::size_t bin, int level) const {
    return level_time[station][bin * (level_cap + 1) + level];
  }
};

/// Concatenates two consecutive segments of one trajectory.
/// Requires a.end == b.start and identical layouts.
TrajectoryRecord merge(const TrajectoryRecord& a, const TrajectoryRecord& b);

}  // namespace cascade
