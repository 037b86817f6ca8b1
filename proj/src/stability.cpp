#include "cascade/stability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cascade/replicate.hpp"

namespace cascade {

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::stable: return "stable";
    case Classification::unstable: return "unstable";
    case Classification::boundary: return "boundary";
  }
  return "unknown";
}

double rho_tilde(double lambda, double mu, double mu_overflow, double rho_star_next) {
  if (!(lambda >= 0.0)) throw ValidationError("rho_tilde: lambda must be nonnegative");
  if (!(mu > 0.0)) throw ValidationError("rho_tilde: mu must be positive");
  if (!(mu_overflow >= 0.0)) throw ValidationError("rho_tilde: mu_overflow must be nonnegative");
  if (!(rho_star_next >= 0.0 && rho_star_next <= 1.0)) throw ValidationError("rho_tilde: rho_star_next must lie in [0, 1]");
  return lambda / (mu + mu_overflow * (1.0 - rho_star_next));
}

Classification classify_criterion(double low, double high, double margin) {
  if (high < 1.0 - margin) return Classification::stable;
  if (low > 1.0 + margin) return Classification::unstable;
  return Classification::boundary;
}

namespace {

StationVerdict nominal(const SystemConfig& config, int i) {
  StationVerdict v;
  v.station = i;
  v.lambda = config.arrival_rate(i);
  v.mu = config.service_rate(i);
  v.mu_overflow = config.overflow_rate(i);
  v.rho = v.lambda / v.mu;
  return v;
}

void finalize(StabilityVerdict& out) {
  out.overall = Classification::stable;
  for (const auto& s : out.stations) {
    if (!s.evaluated) continue;
    if (s.classification == Classification::unstable) {
      out.overall = Classification::unstable;
      out.deciding_station = s.station;
      return;
    }
    if (s.classification == Classification::boundary && out.overall == Classification::stable) {
      out.overall = Classification::boundary;
      out.deciding_station = s.station;
    }
  }
}

void evaluate_last(StationVerdict& v, double margin) {
  v.rho_tilde = v.rho_tilde_low = v.rho_tilde_high = v.rho;
  v.classification = classify_criterion(v.rho, v.rho, margin);
  v.evaluated = true;
  if (v.rho <= 1.0) v.rho_star = Estimate{v.rho, 0.0, 0, 0.0};
}

void evaluate_upper(StationVerdict& v, const StationVerdict& below, double margin) {
  const Estimate next = below.rho_star.value_or(Estimate{1.0, 0.0, 0, 0.0});
  const double lo = std::clamp(next.value - next.half_width, 0.0, 1.0);
  const double hi = std::clamp(next.value + next.half_width, 0.0, 1.0);
  v.rho_tilde = rho_tilde(v.lambda, v.mu, v.mu_overflow, std::clamp(next.value, 0.0, 1.0));
  v.rho_tilde_low = rho_tilde(v.lambda, v.mu, v.mu_overflow, lo);
  v.rho_tilde_high = rho_tilde(v.lambda, v.mu, v.mu_overflow, hi);
  v.naive_rho_tilde = rho_tilde(v.lambda, v.mu, v.mu_overflow, std::clamp(below.rho_tilde, 0.0, 1.0));
  v.classification = classify_criterion(v.rho_tilde_low, v.rho_tilde_high, margin);
  v.evaluated = true;
}

}  // namespace

StabilityVerdict classify_two_station(const SystemConfig& config, double margin) {
  config.validate();
  if (config.k() != 2) throw ValidationError("classify_two_station: requires exactly two stations");
  StabilityVerdict out;
  out.margin = margin;
  out.stations = {nominal(config, 0), nominal(config, 1)};
  evaluate_last(out.stations[1], margin);
  evaluate_upper(out.stations[0], out.stations[1], margin);
  finalize(out);
  return out;
}

Estimate suffix_rho_star(const SystemConfig& config, int first, const SimBudget& budget) {
  const auto sub = subsystem(config, first);
  RunOptions opts;
  opts.event_cap = budget.event_cap;
  opts.layout = budget.layout;
  const auto records = run_replications(sub, budget.horizon, budget.replications, opts, budget.threads);
  std::vector<Estimate> est;
  for (const auto& r : records) {
    if (r.truncated) throw ValidationError("simulation budget: event cap reached while estimating rho*");
    est.push_back(effective_traffic_intensity(r, 0, budget.window));
  }
  return combine(est, budget.window.confidence);
}

StabilityVerdict backward_induction(const SystemConfig& config, const SimBudget& budget, double margin) {
  config.validate();
  const int k = config.k();
  if (k < 2) throw ValidationError("backward_induction: requires at least two stations");
  StabilityVerdict out;
  out.margin = margin;
  for (int i = 0; i < k; ++i) out.stations.push_back(nominal(config, i));

  auto& last = out.stations[k - 1];
  evaluate_last(last, margin);
  if (last.classification == Classification::stable && budget.simulate_last_station)
    last.rho_star_simulated = suffix_rho_star(config, k - 1, budget);

  for (int i = k - 2; i >= 0; --i) {
    const auto& below = out.stations[i + 1];
    if (below.classification != Classification::stable) break;
    auto& v = out.stations[i];
    evaluate_upper(v, below, margin);
    if (v.classification == Classification::boundary && below.rho_star && below.rho_star->half_width > 0.0 &&
        v.rho_tilde_low <= 1.0 && v.rho_tilde_high >= 1.0) {
      std::ostringstream msg;
      msg << "confidence interval of rho* at station " << i + 2
          << " straddles the critical value for station " << i + 1 << "; raise the simulation budget";
      out.advice = msg.str();
    }
    if (v.classification == Classification::stable && i > 0) v.rho_star = suffix_rho_star(config, i, budget);
  }
  finalize(out);
  return out;
}

DriftVerdict full_system_drift(const SystemConfig& config, const SimBudget& budget, int station) {
  RunOptions opts;
  opts.event_cap = budget.event_cap;
  opts.layout = budget.layout;
  const auto records = run_replications(config, budget.horizon, budget.replications, opts, budget.threads);
  std::vector<double> drifts;
  for (const auto& r : records) drifts.push_back(drift_estimate(r, station));
  return drift_verdict(drifts);
}

}  // namespace cascade
