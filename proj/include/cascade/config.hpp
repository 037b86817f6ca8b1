#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cascade/distribution.hpp"

namespace cascade {

/// Overflow link from station i to station i+1.
struct TransferLink {
  int threshold = 1;              // c_i; a transfer needs strictly more than this many class-i customers
  DistributionSpec service;       // service law of a transferred customer at station i+1
  friend bool operator==(const TransferLink&, const TransferLink&) = default;
};

struct StationConfig {
  DistributionSpec arrival;
  DistributionSpec service;
  std::optional<TransferLink> transfer;  // present for every station but the last
  friend bool operator==(const StationConfig&, const StationConfig&) = default;
};

/// k-station cascade. Stations are indexed 0..k-1 in code and 1..k in reports.
struct SystemConfig {
  std::vector<StationConfig> stations;
  std::uint64_t seed = 1;

  /// Initial class-i counts (empty means all zero) and initial overflow slot
  /// occupancy per link (empty means all free).
  std::vector<std::int64_t> initial_queues;
  std::vector<int> initial_overflow;

  /// Global index of stations[0]. Streams are addressed by global station
  /// index, so a suffix subsystem draws the same variates as the stations it
  /// was cut from.
  int station_offset = 0;

  [[nodiscard]] int k() const { return static_cast<int>(stations.size()); }
  [[nodiscard]] double arrival_rate(int i) const { return stations.at(i).arrival.rate(); }
  [[nodiscard]] double service_rate(int i) const { return stations.at(i).service.rate(); }
  /// mu_{i|(i+1)}, zero for the last station.
  [[nodiscard]] double overflow_rate(int i) const;
  [[nodiscard]] int threshold(int i) const { return stations.at(i).transfer->threshold; }

  /// Throws ValidationError listing every violation.
  void validate() const;
};

/// Stations first..k-1 as a stand-alone cascade; `first` receives no inflow.
SystemConfig subsystem(const SystemConfig& config, int first);

/// Stream index layout: three independent streams per global station.
enum class StreamRole : std::uint64_t { arrival = 0, service = 1, overflow_service = 2 };
std::uint64_t stream_index(int global_station, StreamRole role);

}  // namespace cascade
