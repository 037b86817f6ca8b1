#pragma once

// Data-parallel kernels behind the stationary solver.
//
// Every kernel has a scalar reference in namespace `scalar` and vector
// variants (AVX2 on x86-64, NEON on AArch64) selected once at runtime.
// The mat-vec variants are bit-identical to the scalar reference: each
// output row is accumulated in the same slot order with separate multiply
// and add. Reductions split the sum across lanes and agree with the
// reference to rounding.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace cascade::kernels {

enum class Isa { scalar, avx2, neon };
std::string_view to_string(Isa isa);

/// Best variant supported by this build and CPU.
Isa detect_isa();
/// Variant currently used by the dispatching entry points.
Isa active_isa();
/// Forces a variant; unsupported requests fall back to scalar. Returns the variant in effect.
Isa set_isa(Isa isa);

/// Fixed-width sparse matrix (ELLPACK), slot-major: entry (row r, slot s)
/// lives at s * rows + r. Unused slots hold value 0 and column r.
struct EllMatrix {
  std::size_t rows = 0;
  std::size_t width = 0;
  std::vector<std::uint32_t> col;
  std::vector<double> val;
};

/// y = A x
void ell_multiply(const EllMatrix& a, std::span<const double> x, std::span<double> y);
/// sum |a_i - b_i|
double l1_distance(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> x);
/// x *= factor
void scale(std::span<double> x, double factor);

namespace scalar {
void ell_multiply(const EllMatrix& a, std::span<const double> x, std::span<double> y);
double l1_distance(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> x);
void scale(std::span<double> x, double factor);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void ell_multiply(const EllMatrix& a, std::span<const double> x, std::span<double> y);
double l1_distance(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> x);
void scale(std::span<double> x, double factor);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
void ell_multiply(const EllMatrix& a, std::span<const double> x, std::span<double> y);
double l1_distance(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> x);
void scale(std::span<double> x, double factor);
}  // namespace neon
#endif

}  // namespace cascade::kernels
