#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cascade/config.hpp"
#include "cascade/distribution.hpp"

namespace cascade {

// ---- GI/G/1 and M/M/1 references ------------------------------------------

/// Waiting times of n successive customers of a single FIFO server:
/// W_1 = 0, W_{j+1} = max(0, W_j + S_j - T_j), with S_j drawn from `services`
/// and the interarrival time T_j from `arrivals`.
std::vector<double> lindley_waiting(VariateStream& arrivals, VariateStream& services, std::size_t n);

/// Mean stationary waiting time in queue of M/M/1, rho / (mu - lambda).
double mm1_mean_wait(double lambda, double mu);
/// Stationary P(Q = n) of M/M/1.
double mm1_queue_pmf(double rho, std::int64_t n);

// ---- Truncated CTMC of the exponential two-station cascade ---------------

struct CtmcSpec {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double mu1 = 1.0;
  double mu2 = 1.0;
  double mu12 = 1.0;
  int threshold = 1;    // c_1
  int truncation = 200; // cap N on q1 and q2

  /// Rates positive and N > c_1 + 10. mu12 = 0 is accepted only with
  /// c_1 >= N, where station 1 never sheds load inside the truncation.
  void validate() const;

  /// Exponential k = 2 configuration to CTMC parameters.
  static CtmcSpec from_config(const SystemConfig& config, int truncation);
};

/// State (q1, q2, b) with b the overflow-slot occupancy.
struct CtmcState {
  int q1 = 0;
  int q2 = 0;
  int b = 0;
  friend bool operator==(const CtmcState&, const CtmcState&) = default;
};

/// Sparse generator in CSR form (off-diagonal rates) plus its diagonal.
class CtmcGenerator {
 public:
  explicit CtmcGenerator(const CtmcSpec& spec);

  [[nodiscard]] const CtmcSpec& spec() const { return spec_; }
  [[nodiscard]] std::size_t states() const { return diag_.size(); }
  [[nodiscard]] std::size_t index(CtmcState s) const;
  [[nodiscard]] CtmcState state(std::size_t index) const;

  /// Off-diagonal entries of row i as (target, rate) ranges.
  [[nodiscard]] std::size_t row_begin(std::size_t i) const { return row_ptr_[i]; }
  [[nodiscard]] std::size_t row_end(std::size_t i) const { return row_ptr_[i + 1]; }
  [[nodiscard]] std::uint32_t target(std::size_t e) const { return col_[e]; }
  [[nodiscard]] double rate(std::size_t e) const { return rate_[e]; }
  [[nodiscard]] double diagonal(std::size_t i) const { return diag_[i]; }
  /// Rate from a to b (0 when absent; the diagonal when a == b).
  [[nodiscard]] double rate(CtmcState from, CtmcState to) const;
  [[nodiscard]] double max_exit_rate() const { return max_exit_; }

  /// q1 > c_1, q2 = 0, b = 0: a transfer would already have happened.
  [[nodiscard]] bool forbidden(CtmcState s) const;

 private:
  CtmcSpec spec_;
  std::vector<std::uint32_t> row_ptr_;
  std::vector<std::uint32_t> col_;
  std::vector<double> rate_;
  std::vector<double> diag_;
  double max_exit_ = 0.0;
};

/// Builds the generator of the truncated chain. Instantaneous transfers are
/// folded into the transition that triggers them; arrivals at a cap are lost.
CtmcGenerator cascade_ctmc_generator(const CtmcSpec& spec);

struct SolveOptions {
  double tolerance = 1e-12;          // total variation between successive iterates
  std::uint64_t max_iterations = 20'000'000;
  double truncation_warning = 1e-6;
};

struct StationaryTable {
  int truncation = 0;
  std::vector<double> probability;  // indexed like CtmcGenerator::index
  double truncation_mass = 0.0;     // mass with q1 >= N-2 or q2 >= N-2
  std::uint64_t iterations = 0;
  double last_change = 0.0;         // total variation of the final step
  std::string warning;

  [[nodiscard]] double at(CtmcState s) const;
  [[nodiscard]] std::vector<double> marginal(int station) const;  // station 0 -> q1, 1 -> q2
};

/// Stationary law by uniformization and power iteration. Throws
/// std::runtime_error when the iteration cap is hit.
StationaryTable stationary_solve(const CtmcGenerator& generator, const SolveOptions& options = {});

/// 1 - P(q_station = 0).
double oracle_rho_star(const StationaryTable& table, int station);

}  // namespace cascade
