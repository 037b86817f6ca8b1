#include "support.hpp"

#include <cmath>
#include <sstream>

namespace cascade::testing {

DistributionSpec exp_rate(double rate) { return DistributionSpec::exponential(1.0 / rate); }

SystemConfig two_station(double lambda1, double lambda2, double mu1, double mu2, double mu12, int threshold) {
  SystemConfig c;
  c.stations.push_back({exp_rate(lambda1), exp_rate(mu1), TransferLink{threshold, exp_rate(mu12)}});
  c.stations.push_back({exp_rate(lambda2), exp_rate(mu2), std::nullopt});
  return c;
}

SystemConfig reference_instance(double lambda1) { return two_station(lambda1, 0.5); }

SystemConfig three_station(double lambda1, double lambda2, double lambda3, int c1, int c2) {
  SystemConfig c;
  c.stations.push_back({exp_rate(lambda1), exp_rate(1.0), TransferLink{c1, exp_rate(1.0)}});
  c.stations.push_back({exp_rate(lambda2), exp_rate(1.0), TransferLink{c2, exp_rate(1.0)}});
  c.stations.push_back({exp_rate(lambda3), exp_rate(1.0), std::nullopt});
  return c;
}

SystemConfig single_station(const DistributionSpec& arrival, double mu) {
  SystemConfig c;
  c.stations.push_back({arrival, exp_rate(mu), std::nullopt});
  return c;
}

InvariantAuditor::InvariantAuditor(const SystemConfig& config, const SystemState& initial)
    : q0_(initial.queue), last_time_(initial.clock) {
  const int k = config.k();
  for (int j = 0; j + 1 < k; ++j) threshold_.push_back(config.threshold(j));
  for (auto b : initial.overflow) b0_.push_back(b);
  arrivals_.assign(k, 0);
  departures_.assign(k, 0);
  transfers_.assign(k, 0);
  overflow_done_.assign(k, 0);
  last_queue_ = initial.queue;
  last_overflow_ = initial.overflow;
  last_event_.time = initial.clock;
  check_settled();
}

void InvariantAuditor::note(const std::string& what, const Event& e) {
  std::ostringstream s;
  s.precision(17);
  s << what << " after " << to_string(e.kind) << " at station " << e.station + 1 << ", t = " << e.time;
  violations.push_back(s.str());
}

void InvariantAuditor::check_settled() {
  for (std::size_t j = 0; j < threshold_.size(); ++j)
    if (last_queue_[j] > threshold_[j] && last_queue_[j + 1] == 0 && last_overflow_[j] == 0)
      note("forbidden state", last_event_);
}

void InvariantAuditor::finish() { check_settled(); }

void InvariantAuditor::on_event(const Event& e, const SystemState& s) {
  ++events;
  if (!first_ && e.seq != last_seq_ + 1) note("sequence gap", e);
  if (e.time < last_time_) note("time went backwards", e);
  // The trigger of an instant is emitted before its transfers, so the state
  // left by the previous instant is settled only when a new trigger arrives.
  if (e.kind != EventKind::transfer) check_settled();
  first_ = false;
  last_seq_ = e.seq;
  last_time_ = e.time;
  switch (e.kind) {
    case EventKind::arrival: ++arrivals_[e.station]; break;
    case EventKind::service_completion: ++departures_[e.station]; break;
    case EventKind::transfer: ++transfers_[e.station]; break;
    case EventKind::overflow_completion: ++overflow_done_[e.station]; break;
  }
  const int k = s.k();
  for (int i = 0; i < k; ++i) {
    const auto expect = q0_[i] + arrivals_[i] - departures_[i] - transfers_[i];
    if (s.queue[i] != expect) note("flow balance of class " + std::to_string(i + 1), e);
  }
  for (int j = 0; j + 1 < k; ++j) {
    const auto held = b0_[j] + transfers_[j] - overflow_done_[j];
    if (s.overflow[j] != held) note("flow balance of overflow class " + std::to_string(j + 1), e);
    if (held < 0 || held > 1) note("overflow class count out of [0, 1]", e);
  }
  last_queue_ = s.queue;
  last_overflow_ = s.overflow;
  last_event_ = e;
}

SystemConfig random_scenario(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick_k(1, 3), pick_family(0, 5), pick_c(1, 4), pick_q(0, 6), pick_b(0, 1);
  std::uniform_real_distribution<double> rate(0.2, 2.5), shape(0.3, 1.5);
  auto law = [&](double mean) {
    switch (pick_family(rng)) {
      case 0: return DistributionSpec::exponential(mean);
      case 1: return DistributionSpec::erlang(std::uniform_int_distribution<int>(1, 4)(rng), mean);
      case 2: {
        const double p = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
        const double a = mean * shape(rng);
        // second branch mean chosen so the mixture mean is `mean`
        const double b = (mean - p * a) / (1.0 - p);
        if (b > 0.0) return DistributionSpec::hyperexponential({p, 1.0 - p}, {a, b});
        return DistributionSpec::exponential(mean);
      }
      case 3: {
        const double h = mean * std::uniform_real_distribution<double>(0.05, 0.95)(rng);
        return DistributionSpec::uniform(mean - h, mean + h);
      }
      case 4: return DistributionSpec::deterministic(mean);
      default: {
        const double sigma = shape(rng);
        return DistributionSpec::lognormal(std::log(mean) - 0.5 * sigma * sigma, sigma);
      }
    }
  };
  SystemConfig c;
  const int k = pick_k(rng);
  for (int i = 0; i < k; ++i) {
    StationConfig st{law(1.0 / rate(rng)), law(1.0 / rate(rng)), std::nullopt};
    if (i + 1 < k) st.transfer = TransferLink{pick_c(rng), law(1.0 / rate(rng))};
    c.stations.push_back(std::move(st));
  }
  for (int i = 0; i < k; ++i) c.initial_queues.push_back(pick_q(rng));
  for (int j = 0; j + 1 < k; ++j) c.initial_overflow.push_back(pick_b(rng));
  c.seed = rng();
  return c;
}

bool identical(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  if (a.start != b.start || a.end != b.end || a.events != b.events || a.truncated != b.truncated) return false;
  if (a.k() != b.k() || a.bin_width != b.bin_width || a.first_bin != b.first_bin) return false;
  for (int i = 0; i < a.k(); ++i) {
    const auto &x = a.stations[i], &y = b.stations[i];
    if (x.arrivals != y.arrivals || x.departures != y.departures || x.busy != y.busy || x.idle != y.idle ||
        x.below_threshold != y.below_threshold || x.occupancy != y.occupancy ||
        x.terminal_queue != y.terminal_queue || x.max_queue != y.max_queue)
      return false;
  }
  for (std::size_t j = 0; j < a.links.size(); ++j) {
    const auto &x = a.links[j], &y = b.links[j];
    if (x.arrivals != y.arrivals || x.departures != y.departures || x.served != y.served ||
        x.saturated != y.saturated || x.terminal != y.terminal)
      return false;
  }
  return a.level_time == b.level_time;
}

AuditResult audit_run(const SystemConfig& config, double horizon) {
  AuditResult out;
  TrajectoryRecord rec;
  try {
    Simulator sim(config);
    InvariantAuditor auditor(config, sim.state());
    Observer* obs[] = {&auditor};
    RunOptions opts;
    opts.layout.bins = 64;
    rec = run_segment(sim, horizon, obs, opts);
    auditor.finish();
    out.violations = std::move(auditor.violations);
    out.events = auditor.events;

    for (int j = 0; j + 1 < rec.k(); ++j) {
      const auto& l = rec.links[j];
      if (!(l.saturated <= l.served)) out.violations.push_back("J > B_{i|(i+1)} on link " + std::to_string(j + 1));
      if (!(l.served <= rec.stations[j + 1].idle))
        out.violations.push_back("B_{i|(i+1)} > I_{i+1} on link " + std::to_string(j + 1));
      const auto held = l.initial + l.arrivals - l.departures;
      if (held != l.terminal) out.violations.push_back("terminal overflow balance on link " + std::to_string(j + 1));
    }
    for (int i = 0; i < rec.k(); ++i) {
      const auto& s = rec.stations[i];
      const auto moved = i + 1 < rec.k() ? rec.links[i].arrivals : 0;
      if (s.initial_queue + s.arrivals - s.departures - moved != s.terminal_queue)
        out.violations.push_back("terminal flow balance at station " + std::to_string(i + 1));
      if (s.terminal_queue != sim.state().queue[i])
        out.violations.push_back("record disagrees with simulator state at station " + std::to_string(i + 1));
    }
    RunOptions replay_opts;
    replay_opts.layout.bins = 64;
    if (!identical(rec, run(config, horizon, {}, replay_opts))) out.violations.push_back("replay differs");
  } catch (const std::exception& e) {
    out.violations.push_back(std::string("fault: ") + e.what());
  }
  return out;
}

}  // namespace cascade::testing
