#include "cascade/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "cascade/kernels.hpp"

namespace cascade {

std::vector<double> lindley_waiting(VariateStream& arrivals, VariateStream& services, std::size_t n) {
  std::vector<double> w;
  if (n == 0) return w;
  w.reserve(n);
  w.push_back(0.0);
  while (w.size() < n) {
    const double s = services.next();
    const double t = arrivals.next();
    w.push_back(std::max(0.0, w.back() + s - t));
  }
  return w;
}

double mm1_mean_wait(double lambda, double mu) {
  if (!(lambda < mu)) throw ValidationError("mm1_mean_wait: requires lambda < mu");
  return (lambda / mu) / (mu - lambda);
}

double mm1_queue_pmf(double rho, std::int64_t n) { return (1.0 - rho) * std::pow(rho, static_cast<double>(n)); }

void CtmcSpec::validate() const {
  auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  if (!positive(lambda1) || !positive(lambda2) || !positive(mu1) || !positive(mu2))
    throw ValidationError("ctmc: lambda1, lambda2, mu1, mu2 must be positive");
  if (!(std::isfinite(mu12) && mu12 >= 0.0)) throw ValidationError("ctmc: mu12 must be nonnegative");
  if (threshold < 1) throw ValidationError("ctmc: threshold must be >= 1");
  if (truncation < 1) throw ValidationError("ctmc: truncation must be positive");
  if (mu12 == 0.0) {
    if (threshold < truncation) throw ValidationError("ctmc: mu12 = 0 requires threshold >= truncation");
  } else if (truncation <= threshold + 10) {
    throw ValidationError("ctmc: truncation must exceed threshold + 10");
  }
}

CtmcSpec CtmcSpec::from_config(const SystemConfig& config, int truncation) {
  config.validate();
  if (config.k() != 2) throw ValidationError("ctmc: requires exactly two stations");
  auto exp_rate = [](const DistributionSpec& d, const char* field) {
    if (d.family() != Family::exponential) throw ValidationError(std::string("ctmc: ") + field + " must be exponential");
    return d.rate();
  };
  CtmcSpec s;
  s.lambda1 = exp_rate(config.stations[0].arrival, "stations[0].arrival");
  s.mu1 = exp_rate(config.stations[0].service, "stations[0].service");
  s.mu12 = exp_rate(config.stations[0].transfer->service, "stations[0].overflow_service");
  s.threshold = config.stations[0].transfer->threshold;
  s.lambda2 = exp_rate(config.stations[1].arrival, "stations[1].arrival");
  s.mu2 = exp_rate(config.stations[1].service, "stations[1].service");
  s.truncation = truncation;
  s.validate();
  return s;
}

std::size_t CtmcGenerator::index(CtmcState s) const {
  const auto side = static_cast<std::size_t>(spec_.truncation + 1);
  return (static_cast<std::size_t>(s.q1) * side + static_cast<std::size_t>(s.q2)) * 2 + static_cast<std::size_t>(s.b);
}

CtmcState CtmcGenerator::state(std::size_t i) const {
  const auto side = static_cast<std::size_t>(spec_.truncation + 1);
  const auto cell = i / 2;
  return {static_cast<int>(cell / side), static_cast<int>(cell % side), static_cast<int>(i % 2)};
}

bool CtmcGenerator::forbidden(CtmcState s) const { return s.q1 > spec_.threshold && s.q2 == 0 && s.b == 0; }

CtmcGenerator::CtmcGenerator(const CtmcSpec& spec) : spec_(spec) {
  spec_.validate();
  const int n = spec_.truncation;
  const int c = spec_.threshold;
  const std::size_t count = static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(n + 1) * 2;
  diag_.assign(count, 0.0);
  row_ptr_.reserve(count + 1);
  row_ptr_.push_back(0);

  std::map<std::uint32_t, double> row;
  for (std::size_t i = 0; i < count; ++i) {
    const auto [q1, q2, b] = state(i);
    row.clear();
    auto add = [&](CtmcState to, double r) {
      if (r > 0.0) row[static_cast<std::uint32_t>(index(to))] += r;
    };
    // Class-1 arrival; counting itself, it transfers when q1 + 1 > c.
    if (q1 >= c && q2 == 0 && b == 0) add({q1, q2, 1}, spec_.lambda1);
    else if (q1 < n) add({q1 + 1, q2, b}, spec_.lambda1);
    if (q1 >= 1) add({q1 - 1, q2, b}, spec_.mu1);
    if (q2 < n) add({q1, q2 + 1, b}, spec_.lambda2);
    if (q2 >= 1) {
      if (q2 == 1 && b == 0 && q1 > c) add({q1 - 1, 0, 1}, spec_.mu2);
      else add({q1, q2 - 1, b}, spec_.mu2);
    }
    if (b == 1 && q2 == 0) {
      if (q1 > c) add({q1 - 1, 0, 1}, spec_.mu12);
      else add({q1, 0, 0}, spec_.mu12);
    }
    double exit = 0.0;
    for (const auto& [j, r] : row) {
      if (j == i) continue;  // a transition back to the same state is not a jump
      col_.push_back(j);
      rate_.push_back(r);
      exit += r;
    }
    diag_[i] = -exit;
    max_exit_ = std::max(max_exit_, exit);
    row_ptr_.push_back(static_cast<std::uint32_t>(col_.size()));
  }
}

double CtmcGenerator::rate(CtmcState from, CtmcState to) const {
  const auto i = index(from);
  const auto j = index(to);
  if (i == j) return diag_[i];
  for (auto e = row_begin(i); e < row_end(i); ++e)
    if (col_[e] == j) return rate_[e];
  return 0.0;
}

CtmcGenerator cascade_ctmc_generator(const CtmcSpec& spec) { return CtmcGenerator(spec); }

double StationaryTable::at(CtmcState s) const {
  const auto side = static_cast<std::size_t>(truncation + 1);
  return probability[(static_cast<std::size_t>(s.q1) * side + static_cast<std::size_t>(s.q2)) * 2 + static_cast<std::size_t>(s.b)];
}

std::vector<double> StationaryTable::marginal(int station) const {
  if (station != 0 && station != 1) throw ValidationError("marginal: station must be 0 or 1");
  std::vector<double> m(truncation + 1, 0.0);
  for (int q1 = 0; q1 <= truncation; ++q1)
    for (int q2 = 0; q2 <= truncation; ++q2)
      for (int b = 0; b < 2; ++b) m[station == 0 ? q1 : q2] += at({q1, q2, b});
  return m;
}

namespace {

// Transpose of the uniformized transition matrix I + Q / Lambda, so that
// one ELL multiply advances a distribution by one step.
kernels::EllMatrix uniformized_transpose(const CtmcGenerator& g, double lambda) {
  const std::size_t n = g.states();
  std::vector<std::vector<std::pair<std::uint32_t, double>>> incoming(n);
  for (std::size_t i = 0; i < n; ++i) {
    incoming[i].emplace_back(static_cast<std::uint32_t>(i), 1.0 + g.diagonal(i) / lambda);
    for (auto e = g.row_begin(i); e < g.row_end(i); ++e)
      incoming[g.target(e)].emplace_back(static_cast<std::uint32_t>(i), g.rate(e) / lambda);
  }
  kernels::EllMatrix m;
  m.rows = n;
  for (const auto& in : incoming) m.width = std::max(m.width, in.size());
  m.col.resize(m.width * n);
  m.val.assign(m.width * n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t s = 0; s < m.width; ++s) {
      if (s < incoming[r].size()) {
        m.col[s * n + r] = incoming[r][s].first;
        m.val[s * n + r] = incoming[r][s].second;
      } else {
        m.col[s * n + r] = static_cast<std::uint32_t>(r);
      }
    }
  }
  return m;
}

}  // namespace

StationaryTable stationary_solve(const CtmcGenerator& g, const SolveOptions& options) {
  const auto& spec = g.spec();
  const std::size_t n = g.states();
  const double lambda = g.max_exit_rate();
  if (!(lambda > 0.0)) throw std::runtime_error("stationary_solve: generator has no transitions");
  const auto p = uniformized_transpose(g, lambda);

  // Product-form starting guess with no mass on forbidden states.
  const double r1 = 0.5;
  const double r2 = std::min(spec.lambda2 / spec.mu2, 0.9);
  std::vector<double> x(n, 0.0), y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = g.state(i);
    if (g.forbidden(s)) continue;
    x[i] = std::pow(r1, s.q1) * std::pow(r2, s.q2);
  }
  kernels::scale(x, 1.0 / kernels::sum(x));

  StationaryTable t;
  t.truncation = spec.truncation;
  for (std::uint64_t it = 1; it <= options.max_iterations; ++it) {
    kernels::ell_multiply(p, x, y);
    kernels::scale(y, 1.0 / kernels::sum(y));
    const double change = 0.5 * kernels::l1_distance(x, y);
    std::swap(x, y);
    t.iterations = it;
    t.last_change = change;
    if (change < options.tolerance) break;
  }
  if (!(t.last_change < options.tolerance)) throw std::runtime_error("stationary_solve: no convergence within the iteration cap");

  t.probability = std::move(x);
  const int cut = spec.truncation - 2;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = g.state(i);
    if (s.q1 >= cut || s.q2 >= cut) t.truncation_mass += t.probability[i];
  }
  if (t.truncation_mass > options.truncation_warning)
    t.warning = "truncation mass " + std::to_string(t.truncation_mass) + " exceeds tolerance; raise the truncation level";
  return t;
}

double oracle_rho_star(const StationaryTable& table, int station) { return 1.0 - table.marginal(station)[0]; }

}  // namespace cascade
