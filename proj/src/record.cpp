#include "cascade/record.hpp"

#include <algorithm>
#include <stdexcept>

namespace cascade {

std::size_t TrajectoryRecord::bin_count() const {
  if (level_time.empty() || level_cap < 0) return 0;
  return level_time.front().size() / static_cast<std::size_t>(level_cap + 1);
}

TrajectoryRecord merge(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  if (a.k() != b.k()) throw std::invalid_argument("merge: station counts differ");
  if (a.end != b.start) throw std::invalid_argument("merge: segments are not consecutive");
  if (a.bin_width != b.bin_width || a.level_cap != b.level_cap) throw std::invalid_argument("merge: record layouts differ");
  if (b.first_bin < a.first_bin) throw std::invalid_argument("merge: bins out of order");

  TrajectoryRecord out = a;
  out.end = b.end;
  out.events = a.events + b.events;
  out.truncated = a.truncated || b.truncated;
  for (int i = 0; i < a.k(); ++i) {
    auto& s = out.stations[i];
    const auto& t = b.stations[i];
    s.arrivals += t.arrivals;
    s.departures += t.departures;
    s.busy += t.busy;
    s.idle += t.idle;
    s.below_threshold += t.below_threshold;
    s.occupancy += t.occupancy;
    s.terminal_queue = t.terminal_queue;
    s.max_queue = std::max(s.max_queue, t.max_queue);
  }
  for (std::size_t j = 0; j < out.links.size(); ++j) {
    auto& l = out.links[j];
    const auto& m = b.links[j];
    l.arrivals += m.arrivals;
    l.departures += m.departures;
    l.served += m.served;
    l.saturated += m.saturated;
    l.terminal = m.terminal;
  }
  const auto slots = static_cast<std::size_t>(a.level_cap + 1);
  const auto offset = static_cast<std::size_t>(b.first_bin - a.first_bin);
  const std::size_t bins = std::max(a.bin_count(), offset + b.bin_count());
  for (int i = 0; i < a.k(); ++i) {
    auto& lt = out.level_time[i];
    lt.resize(bins * slots, 0.0);
    const auto& src = b.level_time[i];
    for (std::size_t x = 0; x < src.size(); ++x) lt[offset * slots + x] += src[x];
  }
  return out;
}

}  // namespace cascade
