#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascade/config.hpp"
#include "cascade/distribution.hpp"
#include "cascade/record.hpp"

namespace cascade {

/// Broken simulator invariant. Aborts the replication that raised it.
class InternalFault : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class EventKind : std::uint8_t {
  service_completion = 0,
  overflow_completion = 1,
  arrival = 2,
  transfer = 3,
};

std::string_view to_string(EventKind kind);

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::arrival;
  int station = 0;  // class index; for overflow events the upstream station i of class i|(i+1)
  std::uint64_t seq = 0;
};

/// Markov state of the cascade.
///
/// Pending events are kept as absolute times; residuals are derived from
/// them. An overflow customer's service is tracked as work done before the
/// current stint plus the start of the stint, so preemption never
/// accumulates subtraction error.
struct SystemState {
  static constexpr double never = std::numeric_limits<double>::infinity();

  double clock = 0.0;
  std::vector<std::int64_t> queue;        // Q_i
  std::vector<std::uint8_t> overflow;     // Q_{i|(i+1)}, one per link
  std::vector<double> next_arrival;       // absolute epoch of the next class-i arrival
  std::vector<double> service_end;        // absolute completion epoch, `never` if idle
  std::vector<double> overflow_work;      // total requirement of the overflow customer
  std::vector<double> overflow_done;      // work completed before the current stint
  std::vector<double> overflow_since;     // start of the current stint, `never` if preempted or empty

  [[nodiscard]] int k() const { return static_cast<int>(queue.size()); }

  [[nodiscard]] double residual_arrival(int i) const { return next_arrival[i] - clock; }
  [[nodiscard]] double residual_service(int i) const { return queue[i] > 0 ? service_end[i] - clock : 0.0; }
  [[nodiscard]] bool overflow_in_service(int link) const { return overflow[link] && queue[link + 1] == 0; }
  [[nodiscard]] double residual_overflow(int link) const;
  [[nodiscard]] double overflow_completion_time(int link) const;

  /// Station i+1 holds neither class-(i+1) nor class-i|(i+1) customers.
  [[nodiscard]] bool downstream_empty(int link) const { return queue[link + 1] == 0 && overflow[link] == 0; }
};

/// Called after every applied event, transfers included.
class Observer {
 public:
  virtual ~Observer() = default;
  virtual void on_event(const Event& event, const SystemState& state) = 0;
};

/// Single-replication event engine.
class Simulator {
 public:
  /// Builds the initial state: configured counts, fresh residual arrival
  /// draws, fresh service draws for customers in service, then the transfer
  /// rule at t = 0. Transfers made here define the initial state and are
  /// not counted as arrivals of the overflow class.
  explicit Simulator(SystemConfig config);

  [[nodiscard]] const SystemState& state() const { return state_; }
  [[nodiscard]] const SystemConfig& config() const { return config_; }
  [[nodiscard]] std::uint64_t events_applied() const { return next_seq_; }

  /// Earliest pending event. Ties: service completion, then overflow
  /// completion, then arrival; within a kind, ascending station index.
  [[nodiscard]] Event next_event() const;

  /// Advances the clock to `event.time`, applies it, then runs the transfer
  /// rule to fixpoint. Every applied event (the trigger and each resulting
  /// transfer) is reported to `observer` if non-null.
  void apply_event(const Event& event, Observer* observer = nullptr);

  /// Moves one waiting customer from station i to i+1 as a class-i|(i+1)
  /// customer while Q_i > c_i and station i+1 is empty. Returns the number
  /// of transfers made.
  int apply_transfer_rule(Observer* observer = nullptr);

  /// Moves the clock to `t` without applying events; no event may be due
  /// before `t`. Valid because pending work is stored as absolute epochs.
  void advance_clock(double t);

  /// Throws InternalFault if the state violates a structural invariant.
  void check_consistency() const;

  /// Service variates drawn per class (class i, then overflow class per link).
  [[nodiscard]] std::uint64_t service_draws(int i) const { return service_[i].draws(); }
  [[nodiscard]] std::uint64_t overflow_draws(int link) const { return overflow_service_[link].draws(); }

 private:
  void emit(EventKind kind, int station, Observer* observer);
  void pause_overflow(int link);

  SystemConfig config_;
  SystemState state_;
  std::vector<VariateStream> arrival_;
  std::vector<VariateStream> service_;
  std::vector<VariateStream> overflow_service_;
  std::vector<int> threshold_;
  std::uint64_t next_seq_ = 0;
};

struct RunOptions {
  std::uint64_t event_cap = std::numeric_limits<std::uint64_t>::max();
  RecordLayout layout;
  bool check_invariants = true;
};

/// Simulates [0, horizon] and returns the accumulated record. Hitting the
/// event cap yields a partial record with `truncated` set.
TrajectoryRecord run(const SystemConfig& config, double horizon, std::span<Observer* const> observers = {},
                     const RunOptions& options = {});

/// Continues `sim` from its current clock up to `until`, recording only that
/// segment.
TrajectoryRecord run_segment(Simulator& sim, double until, std::span<Observer* const> observers = {},
                             const RunOptions& options = {});

/// Writes `seq,t,kind,station,Q1..Qk,Q12..Q(k-1)k` lines.
class EventLogWriter : public Observer {
 public:
  explicit EventLogWriter(std::ostream& out, int k);
  void on_event(const Event& event, const SystemState& state) override;

 private:
  std::ostream& out_;
};

}  // namespace cascade
