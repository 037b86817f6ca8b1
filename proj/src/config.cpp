#include "cascade/config.hpp"

#include <string>

namespace cascade {

double SystemConfig::overflow_rate(int i) const {
  const auto& st = stations.at(i);
  return st.transfer ? st.transfer->service.rate() : 0.0;
}

void SystemConfig::validate() const {
  std::vector<std::string> errors;
  const int n = k();
  if (n < 1) errors.emplace_back("stations: at least one station is required");
  for (int i = 0; i < n; ++i) {
    const auto& st = stations[i];
    const std::string where = "stations[" + std::to_string(i) + "]";
    if (i + 1 < n && !st.transfer) errors.push_back(where + ".transfer: required for every station but the last");
    if (i + 1 == n && st.transfer) errors.push_back(where + ".transfer: the last station has no downstream link");
    if (st.transfer && st.transfer->threshold < 1) errors.push_back(where + ".threshold: threshold must be >= 1");
  }
  if (!initial_queues.empty()) {
    if (static_cast<int>(initial_queues.size()) != n) errors.emplace_back("initial.queues: need one entry per station");
    for (auto q : initial_queues)
      if (q < 0) errors.emplace_back("initial.queues: counts must be nonnegative");
  }
  if (!initial_overflow.empty()) {
    if (static_cast<int>(initial_overflow.size()) != n - 1) errors.emplace_back("initial.overflow: need one entry per link");
    for (int b : initial_overflow)
      if (b != 0 && b != 1) errors.emplace_back("initial.overflow: entries must be 0 or 1");
  }
  if (station_offset < 0) errors.emplace_back("station_offset: must be nonnegative");
  if (errors.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& e : errors) msg += "\n  " + e;
  throw ValidationError(msg);
}

SystemConfig subsystem(const SystemConfig& config, int first) {
  if (first < 0 || first >= config.k())
    throw ValidationError("subsystem: station index " + std::to_string(first) + " out of range");
  SystemConfig sub;
  sub.seed = config.seed;
  sub.station_offset = config.station_offset + first;
  sub.stations.assign(config.stations.begin() + first, config.stations.end());
  if (!config.initial_queues.empty())
    sub.initial_queues.assign(config.initial_queues.begin() + first, config.initial_queues.end());
  if (!config.initial_overflow.empty())
    sub.initial_overflow.assign(config.initial_overflow.begin() + first, config.initial_overflow.end());
  return sub;
}

std::uint64_t stream_index(int global_station, StreamRole role) {
  return 3 * static_cast<std::uint64_t>(global_station) + static_cast<std::uint64_t>(role);
}

}  // namespace cascade
