#include "cascade/distribution.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace cascade {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::exponential: return "exponential";
    case Family::erlang: return "erlang";
    case Family::hyperexponential: return "hyperexponential";
    case Family::uniform: return "uniform";
    case Family::deterministic: return "deterministic";
    case Family::lognormal: return "lognormal";
  }
  return "unknown";
}

Family family_from_string(std::string_view name) {
  for (auto f : {Family::exponential, Family::erlang, Family::hyperexponential, Family::uniform,
                 Family::deterministic, Family::lognormal}) {
    if (to_string(f) == name) return f;
  }
  throw ValidationError("family: unknown distribution family '" + std::string(name) + "'");
}

DistributionSpec::DistributionSpec(Params params) : params_(std::move(params)) { validate(); }

DistributionSpec DistributionSpec::exponential(double mean) { return DistributionSpec(Exponential{mean}); }
DistributionSpec DistributionSpec::erlang(int shape, double mean) { return DistributionSpec(Erlang{shape, mean}); }
DistributionSpec DistributionSpec::hyperexponential(std::vector<double> probs, std::vector<double> means) {
  return DistributionSpec(Hyperexponential{std::move(probs), std::move(means)});
}
DistributionSpec DistributionSpec::uniform(double low, double high) { return DistributionSpec(Uniform{low, high}); }
DistributionSpec DistributionSpec::deterministic(double value) { return DistributionSpec(Deterministic{value}); }
DistributionSpec DistributionSpec::lognormal(double mu, double sigma) { return DistributionSpec(Lognormal{mu, sigma}); }

void DistributionSpec::validate() const {
  std::visit(Overloaded{
                 [](const Exponential& p) { require(positive_finite(p.mean), "exponential.mean must be a positive finite number"); },
                 [](const Erlang& p) {
                   require(p.shape >= 1, "erlang.shape must be a positive integer");
                   require(positive_finite(p.mean), "erlang.mean must be a positive finite number");
                 },
                 [](const Hyperexponential& p) {
                   require(!p.probs.empty(), "hyperexponential.probs must not be empty");
                   require(p.probs.size() == p.means.size(), "hyperexponential.means must have one entry per branch probability");
                   for (double q : p.probs) require(std::isfinite(q) && q >= 0.0, "hyperexponential.probs must be nonnegative");
                   for (double m : p.means) require(positive_finite(m), "hyperexponential.means must be positive finite numbers");
                   double total = std::accumulate(p.probs.begin(), p.probs.end(), 0.0);
                   require(std::abs(total - 1.0) < 1e-9, "hyperexponential.probs must sum to 1");
                 },
                 [](const Uniform& p) {
                   require(std::isfinite(p.low) && p.low >= 0.0, "uniform.low must be a nonnegative finite number");
                   require(std::isfinite(p.high) && p.low < p.high, "uniform.high must exceed uniform.low");
                 },
                 [](const Deterministic& p) { require(positive_finite(p.value), "deterministic.value must be a positive finite number"); },
                 [](const Lognormal& p) {
                   require(std::isfinite(p.mu), "lognormal.mu must be finite");
                   require(positive_finite(p.sigma), "lognormal.sigma must be a positive finite number");
                   require(std::isfinite(std::exp(p.mu + 0.5 * p.sigma * p.sigma)), "lognormal: mean overflows");
                 },
             },
             params_);
}

Family DistributionSpec::family() const { return static_cast<Family>(params_.index()); }

double DistributionSpec::mean() const {
  return std::visit(Overloaded{
                        [](const Exponential& p) { return p.mean; },
                        [](const Erlang& p) { return p.mean; },
                        [](const Hyperexponential& p) {
                          return std::inner_product(p.probs.begin(), p.probs.end(), p.means.begin(), 0.0);
                        },
                        [](const Uniform& p) { return 0.5 * (p.low + p.high); },
                        [](const Deterministic& p) { return p.value; },
                        [](const Lognormal& p) { return std::exp(p.mu + 0.5 * p.sigma * p.sigma); },
                    },
                    params_);
}

DistributionSpec DistributionSpec::with_mean(double target) const {
  require(positive_finite(target), "mean must be a positive finite number");
  const double f = target / mean();
  return std::visit(Overloaded{
                        [&](const Exponential&) { return exponential(target); },
                        [&](const Erlang& p) { return erlang(p.shape, target); },
                        [&](const Hyperexponential& p) {
                          auto means = p.means;
                          for (double& m : means) m *= f;
                          return hyperexponential(p.probs, std::move(means));
                        },
                        [&](const Uniform& p) { return uniform(p.low * f, p.high * f); },
                        [&](const Deterministic&) { return deterministic(target); },
                        [&](const Lognormal& p) { return lognormal(p.mu + std::log(f), p.sigma); },
                    },
                    params_);
}

double rate_of(const DistributionSpec& spec) { return spec.rate(); }

SpreadOutReport check_spread_out(const DistributionSpec& spec) {
  switch (spec.family()) {
    case Family::exponential:
    case Family::erlang:
    case Family::hyperexponential:
    case Family::lognormal: return {true, true};
    case Family::uniform: return {false, true};
    case Family::deterministic: return {false, false};
  }
  return {};
}

VariateStream::VariateStream(DistributionSpec spec, std::uint64_t seed, std::uint64_t stream_index)
    : spec_(std::move(spec)), seed_(seed), index_(stream_index) {
  // seed_seq and mt19937_64 are fully specified by the standard.
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_index), static_cast<std::uint32_t>(stream_index >> 32),
                    0x63617363u};
  engine_.seed(seq);
}

double VariateStream::uniform01() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double VariateStream::standard_normal() {
  const double u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double VariateStream::next() {
  ++draws_;
  return std::visit(Overloaded{
                        [&](const DistributionSpec::Exponential& p) { return -p.mean * std::log(uniform01()); },
                        [&](const DistributionSpec::Erlang& p) {
                          double s = 0.0;
                          for (int j = 0; j < p.shape; ++j) s -= std::log(uniform01());
                          return s * (p.mean / p.shape);
                        },
                        [&](const DistributionSpec::Hyperexponential& p) {
                          double u = uniform01();
                          std::size_t branch = 0;
                          while (branch + 1 < p.probs.size() && u > p.probs[branch]) {
                            u -= p.probs[branch];
                            ++branch;
                          }
                          return -p.means[branch] * std::log(uniform01());
                        },
                        [&](const DistributionSpec::Uniform& p) { return p.low + (p.high - p.low) * uniform01(); },
                        [&](const DistributionSpec::Deterministic& p) { return p.value; },
                        [&](const DistributionSpec::Lognormal& p) { return std::exp(p.mu + p.sigma * standard_normal()); },
                    },
                    spec_.params());
}

VariateStream make_stream(const DistributionSpec& spec, std::uint64_t seed, std::uint64_t stream_index) {
  return VariateStream(spec, seed, stream_index);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication) {
  // splitmix64 finalizer
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (replication + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace cascade
