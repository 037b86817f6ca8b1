#include "cascade/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace cascade {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::service_completion: return "service";
    case EventKind::overflow_completion: return "overflow_service";
    case EventKind::arrival: return "arrival";
    case EventKind::transfer: return "transfer";
  }
  return "unknown";
}

double SystemState::overflow_completion_time(int link) const {
  if (!overflow_in_service(link)) return never;
  return overflow_since[link] + (overflow_work[link] - overflow_done[link]);
}

double SystemState::residual_overflow(int link) const {
  if (!overflow[link]) return 0.0;
  double done = overflow_done[link];
  if (overflow_since[link] != never) done += clock - overflow_since[link];
  return overflow_work[link] - done;
}

Simulator::Simulator(SystemConfig config) : config_(std::move(config)) {
  config_.validate();
  const int k = config_.k();
  const auto seed = config_.seed;
  for (int i = 0; i < k; ++i) {
    const int g = config_.station_offset + i;
    const auto& st = config_.stations[i];
    arrival_.push_back(make_stream(st.arrival, seed, stream_index(g, StreamRole::arrival)));
    service_.push_back(make_stream(st.service, seed, stream_index(g, StreamRole::service)));
    if (st.transfer) {
      overflow_service_.push_back(make_stream(st.transfer->service, seed, stream_index(g, StreamRole::overflow_service)));
      threshold_.push_back(st.transfer->threshold);
    }
  }

  auto& s = state_;
  s.queue = config_.initial_queues.empty() ? std::vector<std::int64_t>(k, 0) : config_.initial_queues;
  s.overflow.assign(k - 1, 0);
  for (std::size_t j = 0; j < config_.initial_overflow.size(); ++j) s.overflow[j] = static_cast<std::uint8_t>(config_.initial_overflow[j]);
  s.next_arrival.resize(k);
  s.service_end.resize(k);
  for (int i = 0; i < k; ++i) {
    s.next_arrival[i] = arrival_[i].next();
    s.service_end[i] = s.queue[i] > 0 ? service_[i].next() : SystemState::never;
  }
  s.overflow_work.assign(k - 1, 0.0);
  s.overflow_done.assign(k - 1, 0.0);
  s.overflow_since.assign(k - 1, SystemState::never);
  for (int j = 0; j + 1 < k; ++j) {
    if (!s.overflow[j]) continue;
    s.overflow_work[j] = overflow_service_[j].next();
    if (s.queue[j + 1] == 0) s.overflow_since[j] = 0.0;
  }
  apply_transfer_rule(nullptr);
  check_consistency();
}

Event Simulator::next_event() const {
  const auto& s = state_;
  const int k = s.k();
  Event best{SystemState::never, EventKind::arrival, -1, next_seq_};
  // Strict comparison keeps the first candidate in rank order on ties.
  for (int i = 0; i < k; ++i) {
    if (s.queue[i] > 0 && s.service_end[i] < best.time) best = {s.service_end[i], EventKind::service_completion, i, next_seq_};
  }
  for (int j = 0; j + 1 < k; ++j) {
    if (!s.overflow_in_service(j)) continue;
    const double t = s.overflow_completion_time(j);
    if (t < best.time) best = {t, EventKind::overflow_completion, j, next_seq_};
  }
  for (int i = 0; i < k; ++i) {
    if (s.next_arrival[i] < best.time) best = {s.next_arrival[i], EventKind::arrival, i, next_seq_};
  }
  if (best.station < 0) throw InternalFault("no pending event");
  return best;
}

void Simulator::pause_overflow(int link) {
  auto& s = state_;
  if (s.overflow[link] && s.overflow_since[link] != SystemState::never) {
    s.overflow_done[link] += s.clock - s.overflow_since[link];
    s.overflow_since[link] = SystemState::never;
  }
}

void Simulator::emit(EventKind kind, int station, Observer* observer) {
  const Event e{state_.clock, kind, station, next_seq_++};
  if (observer) observer->on_event(e, state_);
}

void Simulator::apply_event(const Event& event, Observer* observer) {
  auto& s = state_;
  if (event.time < s.clock) throw InternalFault("event scheduled in the past");
  s.clock = event.time;
  const int i = event.station;
  switch (event.kind) {
    case EventKind::arrival:
      if (s.queue[i]++ == 0) {
        s.service_end[i] = s.clock + service_[i].next();
        if (i > 0) pause_overflow(i - 1);  // class-i preempts the overflow customer
      }
      s.next_arrival[i] = s.clock + arrival_[i].next();
      break;
    case EventKind::service_completion:
      if (s.queue[i] <= 0) throw InternalFault("service completion at an empty station");
      if (--s.queue[i] > 0) {
        s.service_end[i] = s.clock + service_[i].next();
      } else {
        s.service_end[i] = SystemState::never;
        if (i > 0 && s.overflow[i - 1]) s.overflow_since[i - 1] = s.clock;  // resume
      }
      break;
    case EventKind::overflow_completion:
      if (!s.overflow_in_service(i)) throw InternalFault("overflow completion while not in service");
      s.overflow[i] = 0;
      s.overflow_work[i] = 0.0;
      s.overflow_done[i] = 0.0;
      s.overflow_since[i] = SystemState::never;
      break;
    case EventKind::transfer:
      throw InternalFault("transfers are produced by the transfer rule, not scheduled");
  }
  emit(event.kind, i, observer);
  apply_transfer_rule(observer);
}

int Simulator::apply_transfer_rule(Observer* observer) {
  auto& s = state_;
  int moved = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int j = 0; j + 1 < s.k(); ++j) {
      if (s.queue[j] > threshold_[j] && s.downstream_empty(j)) {
        // The customer in service stays; a waiting one leaves.
        --s.queue[j];
        s.overflow[j] = 1;
        s.overflow_work[j] = overflow_service_[j].next();
        s.overflow_done[j] = 0.0;
        s.overflow_since[j] = s.clock;
        ++moved;
        changed = true;
        emit(EventKind::transfer, j, observer);
      }
    }
  }
  return moved;
}

void Simulator::check_consistency() const {
  const auto& s = state_;
  const int k = s.k();
  auto fail = [&](const std::string& what, int i) {
    std::ostringstream msg;
    msg << what << " (station " << i + 1 << ", t = " << std::setprecision(17) << s.clock << ")";
    throw InternalFault(msg.str());
  };
  for (int i = 0; i < k; ++i) {
    if (s.queue[i] < 0) fail("negative queue", i);
    // Residuals are differences of absolute epochs and may round to zero,
    // hence >= rather than >.
    if (s.queue[i] > 0 && !(s.service_end[i] >= s.clock && std::isfinite(s.service_end[i]))) fail("busy server without pending completion", i);
    if (s.queue[i] == 0 && s.service_end[i] != SystemState::never) fail("idle server with pending completion", i);
    if (!(s.next_arrival[i] >= s.clock)) fail("arrival scheduled in the past", i);
  }
  for (int j = 0; j + 1 < k; ++j) {
    if (s.overflow[j] > 1) fail("overflow slot holds more than one customer", j);
    if (s.overflow[j]) {
      if (!(s.overflow_work[j] > 0.0)) fail("overflow customer without service requirement", j);
      const bool running = s.overflow_since[j] != SystemState::never;
      if (running != (s.queue[j + 1] == 0)) fail("overflow customer served while class customers present", j);
      if (s.residual_overflow(j) < 0.0) fail("overflow customer past its requirement", j);
    } else if (s.overflow_since[j] != SystemState::never || s.overflow_work[j] != 0.0) {
      fail("stale overflow service on empty slot", j);
    }
    if (s.queue[j] > threshold_[j] && s.downstream_empty(j)) fail("pending transfer not applied", j);
  }
}

namespace {

/// Accumulates a TrajectoryRecord from the event stream.
class Recorder final : public Observer {
 public:
  Recorder(const SystemConfig& cfg, const SystemState& s0, double bin_width, int level_cap, std::uint64_t events_before)
      : q_(s0.queue), b_(s0.overflow), t_(s0.clock), events_before_(events_before) {
    const int k = cfg.k();
    for (int j = 0; j + 1 < k; ++j) c_.push_back(cfg.threshold(j));
    rec_.start = s0.clock;
    rec_.stations.resize(k);
    rec_.links.resize(k - 1);
    for (int i = 0; i < k; ++i) {
      rec_.stations[i].initial_queue = s0.queue[i];
      rec_.stations[i].max_queue = s0.queue[i];
      rec_.arrival_rate.push_back(cfg.arrival_rate(i));
      rec_.service_rate.push_back(cfg.service_rate(i));
      if (i + 1 < k) rec_.overflow_rate.push_back(cfg.overflow_rate(i));
    }
    for (int j = 0; j + 1 < k; ++j) rec_.links[j].initial = s0.overflow[j];
    rec_.bin_width = bin_width;
    rec_.level_cap = level_cap;
    rec_.first_bin = static_cast<std::int64_t>(std::floor(t_ / bin_width));
    cur_bin_ = rec_.first_bin;
    cur_edge_ = static_cast<double>(cur_bin_ + 1) * bin_width;
    while (cur_edge_ <= t_) cur_edge_ = static_cast<double>(++cur_bin_ + 1) * bin_width;
    rec_.first_bin = cur_bin_;
    rec_.level_time.assign(k, {});
    grow();
  }

  void on_event(const Event& e, const SystemState& s) override {
    accumulate(e.time);
    switch (e.kind) {
      case EventKind::arrival: ++rec_.stations[e.station].arrivals; break;
      case EventKind::service_completion: ++rec_.stations[e.station].departures; break;
      case EventKind::overflow_completion: ++rec_.links[e.station].departures; break;
      case EventKind::transfer: ++rec_.links[e.station].arrivals; break;
    }
    for (std::size_t i = 0; i < q_.size(); ++i) {
      q_[i] = s.queue[i];
      rec_.stations[i].max_queue = std::max(rec_.stations[i].max_queue, q_[i]);
    }
    for (std::size_t j = 0; j < b_.size(); ++j) b_[j] = s.overflow[j];
  }

  TrajectoryRecord finish(double end, const SystemState& s, std::uint64_t events_after, bool truncated) {
    accumulate(end);
    rec_.end = end;
    for (int i = 0; i < s.k(); ++i) rec_.stations[i].terminal_queue = s.queue[i];
    for (int j = 0; j + 1 < s.k(); ++j) rec_.links[j].terminal = s.overflow[j];
    rec_.events = events_after - events_before_;
    rec_.truncated = truncated;
    // Drop trailing bins that received no time.
    const auto used = static_cast<std::size_t>(cur_bin_ - rec_.first_bin) + ((t_ > static_cast<double>(cur_bin_) * rec_.bin_width) ? 1 : 0);
    for (auto& lt : rec_.level_time) lt.resize(std::max<std::size_t>(used, 1) * (rec_.level_cap + 1), 0.0);
    return std::move(rec_);
  }

 private:
  void grow() {
    const auto need = static_cast<std::size_t>(cur_bin_ - rec_.first_bin + 1) * (rec_.level_cap + 1);
    for (auto& lt : rec_.level_time)
      if (lt.size() < need) lt.resize(std::max(need, 2 * lt.size()), 0.0);
  }

  void accumulate(double t1) {
    if (t1 <= t_) return;
    const double dt = t1 - t_;
    const int k = static_cast<int>(q_.size());
    for (int i = 0; i < k; ++i) {
      auto& st = rec_.stations[i];
      if (q_[i] > 0) st.busy += dt; else st.idle += dt;
      st.occupancy += static_cast<double>(q_[i]) * dt;
      if (i + 1 < k && q_[i] <= c_[i]) st.below_threshold += dt;
    }
    for (int j = 0; j + 1 < k; ++j) {
      if (q_[j + 1] != 0) continue;
      if (b_[j]) rec_.links[j].served += dt;
      if (q_[j] > c_[j]) rec_.links[j].saturated += dt;
    }
    const int slots = rec_.level_cap + 1;
    while (t_ < t1) {
      const double seg_end = std::min(t1, cur_edge_);
      const double piece = seg_end - t_;
      const auto base = static_cast<std::size_t>(cur_bin_ - rec_.first_bin) * slots;
      for (int i = 0; i < k; ++i) {
        const auto level = static_cast<std::size_t>(std::min<std::int64_t>(q_[i], rec_.level_cap));
        rec_.level_time[i][base + level] += piece;
      }
      t_ = seg_end;
      if (t_ >= cur_edge_) {
        ++cur_bin_;
        cur_edge_ = static_cast<double>(cur_bin_ + 1) * rec_.bin_width;
        grow();
      }
    }
  }

  TrajectoryRecord rec_;
  std::vector<std::int64_t> q_;
  std::vector<std::uint8_t> b_;
  std::vector<int> c_;
  double t_;
  std::int64_t cur_bin_ = 0;
  double cur_edge_ = 0.0;
  std::uint64_t events_before_;
};

class Fanout final : public Observer {
 public:
  Fanout(Recorder& rec, std::span<Observer* const> others) : rec_(rec), others_(others) {}
  void on_event(const Event& e, const SystemState& s) override {
    rec_.on_event(e, s);
    for (auto* o : others_) o->on_event(e, s);
  }

 private:
  Recorder& rec_;
  std::span<Observer* const> others_;
};

}  // namespace

TrajectoryRecord run_segment(Simulator& sim, double until, std::span<Observer* const> observers, const RunOptions& options) {
  const double from = sim.state().clock;
  if (!(until > from)) throw ValidationError("horizon: must exceed the current clock");
  double width = options.layout.bin_width;
  if (width <= 0.0) width = (until - from) / static_cast<double>(std::max<std::size_t>(options.layout.bins, 1));
  if (options.layout.level_cap < 1) throw ValidationError("level_cap: must be >= 1");

  const std::uint64_t first_event = sim.events_applied();
  Recorder rec(sim.config(), sim.state(), width, options.layout.level_cap, first_event);
  Fanout fan(rec, observers);
  bool truncated = false;
  for (;;) {
    if (sim.events_applied() - first_event >= options.event_cap) {
      truncated = true;
      break;
    }
    const Event e = sim.next_event();
    if (e.time > until) break;
    sim.apply_event(e, &fan);
    if (options.check_invariants) sim.check_consistency();
  }
  const double end = truncated ? sim.state().clock : until;
  sim.advance_clock(end);
  return rec.finish(end, sim.state(), sim.events_applied(), truncated);
}

void Simulator::advance_clock(double t) {
  if (t < state_.clock) throw InternalFault("clock cannot move backwards");
  if (next_event().time < t) throw InternalFault("advancing the clock past a pending event");
  state_.clock = t;
}

TrajectoryRecord run(const SystemConfig& config, double horizon, std::span<Observer* const> observers, const RunOptions& options) {
  if (!(horizon > 0.0)) throw ValidationError("horizon: must be positive");
  Simulator sim(config);
  return run_segment(sim, horizon, observers, options);
}

EventLogWriter::EventLogWriter(std::ostream& out, int k) : out_(out) {
  out_ << "seq,t,kind,station";
  for (int i = 1; i <= k; ++i) out_ << ",Q" << i;
  for (int i = 1; i < k; ++i) out_ << ",Q" << i << (i + 1);
  out_ << '\n';
}

void EventLogWriter::on_event(const Event& e, const SystemState& s) {
  out_ << e.seq << ',' << std::setprecision(17) << e.time << ',' << to_string(e.kind) << ',' << e.station + 1;
  for (auto q : s.queue) out_ << ',' << q;
  for (auto b : s.overflow) out_ << ',' << static_cast<int>(b);
  out_ << '\n';
}

}  // namespace cascade
