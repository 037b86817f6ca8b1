#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cascade {

/// Raised for malformed model input. The message names the offending field.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Family { exponential, erlang, hyperexponential, uniform, deterministic, lognormal };

std::string_view to_string(Family family);
Family family_from_string(std::string_view name);

/// Parametric law of a positive interarrival or service time.
///
/// Construct through the named factories; each one validates its parameters
/// and throws ValidationError otherwise. All laws have finite positive mean.
class DistributionSpec {
 public:
  struct Exponential {
    double mean;
    friend bool operator==(const Exponential&, const Exponential&) = default;
  };
  struct Erlang {
    int shape;
    double mean;
    friend bool operator==(const Erlang&, const Erlang&) = default;
  };
  struct Hyperexponential {
    std::vector<double> probs;
    std::vector<double> means;
    friend bool operator==(const Hyperexponential&, const Hyperexponential&) = default;
  };
  struct Uniform {
    double low;
    double high;
    friend bool operator==(const Uniform&, const Uniform&) = default;
  };
  struct Deterministic {
    double value;
    friend bool operator==(const Deterministic&, const Deterministic&) = default;
  };
  /// exp(N(mu, sigma^2))
  struct Lognormal {
    double mu;
    double sigma;
    friend bool operator==(const Lognormal&, const Lognormal&) = default;
  };
  using Params = std::variant<Exponential, Erlang, Hyperexponential, Uniform, Deterministic, Lognormal>;

  static DistributionSpec exponential(double mean);
  static DistributionSpec erlang(int shape, double mean);
  static DistributionSpec hyperexponential(std::vector<double> probs, std::vector<double> means);
  static DistributionSpec uniform(double low, double high);
  static DistributionSpec deterministic(double value);
  static DistributionSpec lognormal(double mu, double sigma);

  [[nodiscard]] Family family() const;
  [[nodiscard]] const Params& params() const { return params_; }
  [[nodiscard]] double mean() const;
  [[nodiscard]] double rate() const { return 1.0 / mean(); }

  /// Same family and shape, time axis rescaled so that the mean becomes `mean`.
  [[nodiscard]] DistributionSpec with_mean(double mean) const;

  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;

 private:
  explicit DistributionSpec(Params params);
  void validate() const;

  Params params_;
};

/// Reciprocal of the mean.
double rate_of(const DistributionSpec& spec);

/// Static classification of the spread-out regularity condition on a law:
/// (a) unbounded support, (b) a nontrivial absolutely continuous component.
struct SpreadOutReport {
  bool unbounded_support = false;
  bool density_component = false;
  [[nodiscard]] bool admissible() const { return unbounded_support && density_component; }
};

SpreadOutReport check_spread_out(const DistributionSpec& spec);

/// Reproducible i.i.d. draws from one law.
///
/// The generator state is a function of (seed, stream index) only, so a
/// stream can be rebuilt bit-exactly on any platform. Variate transforms are
/// implemented here rather than through <random> distributions, whose
/// algorithms are implementation-defined.
class VariateStream {
 public:
  VariateStream(DistributionSpec spec, std::uint64_t seed, std::uint64_t stream_index);

  double next();
  double operator()() { return next(); }

  [[nodiscard]] const DistributionSpec& spec() const { return spec_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream_index() const { return index_; }
  /// Number of variates drawn so far.
  [[nodiscard]] std::uint64_t draws() const { return draws_; }

 private:
  double uniform01();  // open interval (0, 1)
  double standard_normal();

  DistributionSpec spec_;
  std::uint64_t seed_;
  std::uint64_t index_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
};

VariateStream make_stream(const DistributionSpec& spec, std::uint64_t seed, std::uint64_t stream_index);

/// Mixes a master seed with a replication number into an independent seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication);

}  // namespace cascade
