#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cascade/config.hpp"
#include "cascade/metrics.hpp"
#include "cascade/record.hpp"

namespace cascade {

enum class Classification { stable, unstable, boundary };
std::string_view to_string(Classification c);

/// lambda / (mu + mu_overflow * (1 - rho_star_next)).
double rho_tilde(double lambda, double mu, double mu_overflow, double rho_star_next);

/// stable if high < 1 - margin, unstable if low > 1 + margin, boundary otherwise.
Classification classify_criterion(double low, double high, double margin);

struct StationVerdict {
  int station = 0;
  double lambda = 0.0;
  double mu = 0.0;
  double mu_overflow = 0.0;  // zero for the last station
  double rho = 0.0;          // nominal lambda / mu
  /// Effective traffic intensity of this station: analytic rho for the last
  /// station (exact, zero width), simulated on the suffix subsystem otherwise.
  std::optional<Estimate> rho_star;
  /// Simulated suffix estimate kept for cross-checking when rho_star is analytic.
  std::optional<Estimate> rho_star_simulated;
  double rho_tilde = 0.0;
  double rho_tilde_low = 0.0;
  double rho_tilde_high = 0.0;
  /// Criterion evaluated with the downstream rho_tilde in place of rho_star.
  /// Reported only; it is not the stability criterion.
  std::optional<double> naive_rho_tilde;
  bool evaluated = false;
  Classification classification = Classification::boundary;
};

struct StabilityVerdict {
  std::vector<StationVerdict> stations;
  Classification overall = Classification::boundary;
  double margin = 0.02;
  int deciding_station = -1;  // station that made the verdict unstable or boundary
  std::string advice;
};

struct SimBudget {
  double horizon = 1e5;
  int replications = 4;
  WindowOptions window;
  RecordLayout layout;
  std::uint64_t event_cap = std::numeric_limits<std::uint64_t>::max();
  unsigned threads = 0;
  bool simulate_last_station = true;
};

/// Closed-form verdict for k = 2 from nominal rates.
StabilityVerdict classify_two_station(const SystemConfig& config, double margin = 0.02);

/// Checks stations k..1, feeding the simulated effective traffic intensity
/// of each stable suffix into the criterion of the station above it.
/// Stops at the first station that is not clearly stable.
StabilityVerdict backward_induction(const SystemConfig& config, const SimBudget& budget, double margin = 0.02);

/// Replicated drift Q_i(T)/T of the full system.
DriftVerdict full_system_drift(const SystemConfig& config, const SimBudget& budget, int station = 0);

/// Effective traffic intensity of station `first` simulated on subsystem(config, first).
Estimate suffix_rho_star(const SystemConfig& config, int first, const SimBudget& budget);

}  // namespace cascade
