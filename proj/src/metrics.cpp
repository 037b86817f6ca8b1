#include "cascade/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "cascade/distribution.hpp"

namespace cascade {

namespace {

struct Split {
  double above = 0.0;
  double below = 0.0;
};

struct WindowSplit {
  Split total;
  std::vector<Split> batches;
};

// Per-batch time above / at-or-below `level` over the post-warm-up window.
WindowSplit split_window(const TrajectoryRecord& rec, int station, std::int64_t level, const WindowOptions& opts) {
  if (station < 0 || station >= rec.k()) throw ValidationError("station index " + std::to_string(station) + " out of range");
  if (!(opts.warmup >= 0.0 && opts.warmup < 1.0)) throw ValidationError("warmup: must lie in [0, 1)");
  if (opts.batches < 2) throw ValidationError("batches: need at least 2");
  if (!(rec.horizon() > 0.0)) throw ValidationError("record: empty horizon");

  const double window_start = rec.start + opts.warmup * rec.horizon();
  const auto first = static_cast<std::int64_t>(std::ceil(window_start / rec.bin_width - 1e-9)) - rec.first_bin;
  const auto begin = static_cast<std::size_t>(std::max<std::int64_t>(first, 0));
  const std::size_t bins = rec.bin_count();
  const std::size_t n = bins > begin ? bins - begin : 0;
  const auto batches = static_cast<std::size_t>(opts.batches);
  if (n < batches)
    throw ValidationError("window too short: " + std::to_string(n) + " bins for " + std::to_string(batches) +
                          " batches; use a longer horizon or finer bins");

  const int slots = rec.level_cap + 1;
  const auto& lt = rec.level_time[station];
  WindowSplit out;
  out.batches.resize(batches);
  for (std::size_t j = 0; j < batches; ++j) {
    const std::size_t lo = begin + j * n / batches;
    const std::size_t hi = begin + (j + 1) * n / batches;
    auto& s = out.batches[j];
    for (std::size_t b = lo; b < hi; ++b) {
      const double* row = lt.data() + b * slots;
      for (int q = 0; q < slots; ++q) (q > level ? s.above : s.below) += row[q];
    }
    out.total.above += s.above;
    out.total.below += s.below;
  }
  return out;
}

Estimate fraction_above(const TrajectoryRecord& rec, int station, std::int64_t level, const WindowOptions& opts) {
  const auto w = split_window(rec, station, level, opts);
  const double total = w.total.above + w.total.below;
  Estimate e;
  e.batches = opts.batches;
  e.warmup = opts.warmup;
  e.value = total > 0.0 ? w.total.above / total : 0.0;
  std::vector<double> fractions;
  for (const auto& s : w.batches) {
    const double t = s.above + s.below;
    if (t > 0.0) fractions.push_back(s.above / t);
  }
  const auto sum = summarize(fractions);
  e.half_width = sum.n >= 2 ? t_critical(sum.n - 1, opts.confidence) * sum.std_error : 0.0;
  return e;
}

Estimate complement(Estimate e) {
  e.value = 1.0 - e.value;
  return e;
}

}  // namespace

double t_critical(int dof, double confidence) {
  if (dof < 1) return 0.0;
  boost::math::students_t dist(dof);
  return boost::math::quantile(boost::math::complement(dist, 0.5 * (1.0 - confidence)));
}

Estimate effective_traffic_intensity(const TrajectoryRecord& rec, int station, const WindowOptions& opts) {
  return fraction_above(rec, station, 0, opts);
}

Estimate idle_fraction(const TrajectoryRecord& rec, int station, const WindowOptions& opts) {
  return complement(effective_traffic_intensity(rec, station, opts));
}

Estimate tightness_diagnostic(const TrajectoryRecord& rec, int station, std::int64_t level, const WindowOptions& opts) {
  if (level < 0) throw ValidationError("level: must be nonnegative");
  if (level >= rec.level_cap) {
    if (station < 0 || station >= rec.k()) throw ValidationError("station index out of range");
    if (rec.stations[station].max_queue <= level) return {1.0, 0.0, opts.batches, opts.warmup};
    throw ValidationError("level " + std::to_string(level) + " is beyond the tracked range (level_cap " +
                          std::to_string(rec.level_cap) + ")");
  }
  return complement(fraction_above(rec, station, level, opts));
}

double drift_estimate(const TrajectoryRecord& rec, int station) {
  return static_cast<double>(rec.stations.at(station).terminal_queue) / rec.horizon();
}

std::optional<double> little_residual(const TrajectoryRecord& rec, const WindowOptions& opts) {
  const auto& s = rec.stations.at(0);
  if (s.busy <= 0.0) return std::nullopt;
  const double mu_hat = static_cast<double>(s.departures) / s.busy;
  const double rho_hat = effective_traffic_intensity(rec, 0, opts).value;
  const auto transfers = rec.links.empty() ? 0 : rec.links[0].arrivals;
  const double net_input = static_cast<double>(s.arrivals - transfers) / rec.horizon();
  return std::abs(mu_hat * rho_hat - net_input);
}

OverflowBound overflow_bound_check(const TrajectoryRecord& rec, int link, const WindowOptions& opts, double half_widths) {
  if (link < 0 || link >= static_cast<int>(rec.links.size())) throw ValidationError("link index out of range");
  const auto& l = rec.links[link];
  OverflowBound out;
  out.rate = static_cast<double>(l.departures) / rec.horizon();
  out.service_rate = l.served > 0.0 ? static_cast<double>(l.departures) / l.served : rec.overflow_rate.at(link);
  const auto idle = idle_fraction(rec, link + 1, opts);
  out.bound = out.service_rate * idle.value;
  out.tolerance = half_widths * out.service_rate * idle.half_width;
  out.slack = out.bound + out.tolerance - out.rate;
  out.holds = out.slack >= 0.0;
  return out;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.n;
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std_error = std::sqrt(ss / (s.n - 1) / s.n);
  return s;
}

Estimate combine(std::span<const Estimate> per_replication, double confidence) {
  if (per_replication.empty()) return {};
  if (per_replication.size() == 1) return per_replication.front();
  std::vector<double> values;
  for (const auto& e : per_replication) values.push_back(e.value);
  const auto s = summarize(values);
  Estimate out = per_replication.front();
  out.value = s.mean;
  out.half_width = t_critical(s.n - 1, confidence) * s.std_error;
  return out;
}

DriftVerdict drift_verdict(std::span<const double> drifts, double floor) {
  const auto s = summarize(drifts);
  return {s.mean, s.std_error, s.mean > 3.0 * s.std_error && s.mean > floor};
}

}  // namespace cascade
