#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cascade/config.hpp"
#include "cascade/record.hpp"
#include "cascade/simulator.hpp"

namespace cascade::testing {

DistributionSpec exp_rate(double rate);

/// Two-station instance: exponential laws, c_1 = threshold.
SystemConfig two_station(double lambda1, double lambda2, double mu1 = 1.0, double mu2 = 1.0, double mu12 = 1.0,
                         int threshold = 1);

/// lambda1 = 1.2, lambda2 = 0.5, all mu = 1, c_1 = 1.
SystemConfig reference_instance(double lambda1 = 1.2);

/// Exponential three-station instance with unit service rates.
SystemConfig three_station(double lambda1, double lambda2, double lambda3, int c1 = 1, int c2 = 1);

/// Single exponential station.
SystemConfig single_station(const DistributionSpec& arrival, double mu);

/// Checks the sample-path identities at every event: flow balance per
/// class and 0 <= Q_{i|(i+1)}(0) + A_{i|(i+1)} - D_{i|(i+1)} <= 1. The
/// forbidden predicate Q_i > c_i, Q_{i+1} = 0, Q_{i|(i+1)} = 0 is checked on
/// every settled state, i.e. after the transfer fixpoint of each instant.
class InvariantAuditor final : public Observer {
 public:
  InvariantAuditor(const SystemConfig& config, const SystemState& initial);
  void on_event(const Event& event, const SystemState& state) override;
  /// Checks the last settled state; call once the run has ended.
  void finish();

  std::vector<std::string> violations;
  std::uint64_t events = 0;

 private:
  void note(const std::string& what, const Event& e);
  void check_settled();

  std::vector<int> threshold_;
  std::vector<std::int64_t> q0_;
  std::vector<int> b0_;
  std::vector<std::int64_t> arrivals_, departures_, transfers_, overflow_done_;
  double last_time_ = 0.0;
  std::uint64_t last_seq_ = 0;
  bool first_ = true;
  // State after the most recent event; settled once a non-transfer event follows.
  std::vector<std::int64_t> last_queue_;
  std::vector<std::uint8_t> last_overflow_;
  Event last_event_;
};

/// Draws a small random scenario (k <= 3, any law family, random
/// thresholds, random initial state).
SystemConfig random_scenario(std::mt19937_64& rng);

/// Exact field-by-field equality of two records.
bool identical(const TrajectoryRecord& a, const TrajectoryRecord& b);

struct AuditResult {
  std::vector<std::string> violations;
  std::uint64_t events = 0;
};

/// Runs `config` for `horizon` under the auditor, then checks
/// J <= B_{i|(i+1)} <= I_{i+1}, the terminal flow balance and replay equality.
AuditResult audit_run(const SystemConfig& config, double horizon);

}  // namespace cascade::testing
