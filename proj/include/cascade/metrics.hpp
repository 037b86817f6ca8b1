#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "cascade/record.hpp"

namespace cascade {

/// Point value with a confidence half-width.
struct Estimate {
  double value = 0.0;
  double half_width = 0.0;
  int batches = 0;
  double warmup = 0.0;
};

/// Post-warm-up window and batch-means settings.
struct WindowOptions {
  double warmup = 0.1;  // fraction of the record discarded from the front
  int batches = 32;
  double confidence = 0.95;
};

/// Time-average of 1(Q_i >= 1) over the window.
Estimate effective_traffic_intensity(const TrajectoryRecord& rec, int station, const WindowOptions& opts = {});

/// Time-average of 1(Q_i = 0); exactly 1 - effective_traffic_intensity on the same window.
Estimate idle_fraction(const TrajectoryRecord& rec, int station, const WindowOptions& opts = {});

/// Time-average of 1(Q_i <= level). Levels at or beyond the record's
/// level_cap are answered only when the path never exceeded them.
Estimate tightness_diagnostic(const TrajectoryRecord& rec, int station, std::int64_t level, const WindowOptions& opts = {});

/// Q_i(T) / T.
double drift_estimate(const TrajectoryRecord& rec, int station);

/// |mu1_hat * rho1_hat - (A_1 - A_{1|2}) / T| with mu1_hat = D_1 / B_1.
/// Empty when station 1 was never busy.
std::optional<double> little_residual(const TrajectoryRecord& rec, const WindowOptions& opts = {});

struct OverflowBound {
  bool holds = true;
  double rate = 0.0;       // D_{i|(i+1)} / T
  double bound = 0.0;      // mu_hat_{i|(i+1)} * idle_{i+1}
  double tolerance = 0.0;  // half-width multiple on the bound
  double slack = 0.0;      // bound + tolerance - rate
  double service_rate = 0.0;
};

/// Checks D_{i|(i+1)}/T <= mu_hat_{i|(i+1)} * idle_fraction(i+1) + tolerance,
/// the tolerance being `half_widths` confidence half-widths of the bound.
OverflowBound overflow_bound_check(const TrajectoryRecord& rec, int link, const WindowOptions& opts = {}, double half_widths = 3.0);

/// Mean and standard error over replications.
struct Summary {
  double mean = 0.0;
  double std_error = 0.0;
  int n = 0;
};
Summary summarize(std::span<const double> values);

/// Across-replication combination; falls back to the single batch-means
/// interval for one replication.
Estimate combine(std::span<const Estimate> per_replication, double confidence = 0.95);

/// Two-sided Student-t critical value.
double t_critical(int dof, double confidence);

struct DriftVerdict {
  double mean = 0.0;
  double std_error = 0.0;
  bool drifting = false;
};

/// A queue is declared drifting when its mean Q(T)/T exceeds three
/// replication standard errors and the absolute floor.
DriftVerdict drift_verdict(std::span<const double> drifts, double floor = 1e-3);

}  // namespace cascade
