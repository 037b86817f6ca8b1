#include "cascade/kernels.hpp"

#include <atomic>
#include <cmath>

namespace cascade::kernels {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

Isa detect_isa() {
#if defined(__x86_64__) || defined(_M_X64)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return Isa::avx2;
  return Isa::scalar;
#elif defined(__aarch64__)
  return Isa::neon;
#else
  return Isa::scalar;
#endif
}

namespace {

bool supported(Isa isa) {
  if (isa == Isa::scalar) return true;
  return isa == detect_isa();
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect_isa()};
  return isa;
}

}  // namespace

Isa active_isa() { return current().load(std::memory_order_relaxed); }

Isa set_isa(Isa isa) {
  if (!supported(isa)) isa = Isa::scalar;
  current().store(isa, std::memory_order_relaxed);
  return isa;
}

namespace scalar {

void ell_multiply(const EllMatrix& a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = a.rows;
  for (std::size_t r = 0; r < n; ++r) y[r] = 0.0;
  for (std::size_t s = 0; s < a.width; ++s) {
    const double* v = a.val.data() + s * n;
    const std::uint32_t* c = a.col.data() + s * n;
    for (std::size_t r = 0; r < n; ++r) {
      const double p = v[r] * x[c[r]];
      y[r] = y[r] + p;
    }
  }
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc;
}

double sum(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc;
}

void scale(std::span<double> x, double factor) {
  for (double& v : x) v *= factor;
}

}  // namespace scalar

void ell_multiply(const EllMatrix& a, std::span<const double> x, std::span<double> y) {
  switch (active_isa()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return avx2::ell_multiply(a, x, y);
#endif
#if defined(__aarch64__)
    case Isa::neon: return neon::ell_multiply(a, x, y);
#endif
    default: return scalar::ell_multiply(a, x, y);
  }
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  switch (active_isa()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return avx2::l1_distance(a, b);
#endif
#if defined(__aarch64__)
    case Isa::neon: return neon::l1_distance(a, b);
#endif
    default: return scalar::l1_distance(a, b);
  }
}

double sum(std::span<const double> x) {
  switch (active_isa()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return avx2::sum(x);
#endif
#if defined(__aarch64__)
    case Isa::neon: return neon::sum(x);
#endif
    default: return scalar::sum(x);
  }
}

void scale(std::span<double> x, double factor) {
  switch (active_isa()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return avx2::scale(x, factor);
#endif
#if defined(__aarch64__)
    case Isa::neon: return neon::scale(x, factor);
#endif
    default: return scalar::scale(x, factor);
  }
}

}  // namespace cascade::kernels
