#if defined(__aarch64__)
#include <arm_neon.h>

#include <cmath>

#include "cascade/kernels.hpp"

namespace cascade::kernels::neon {

void ell_multiply(const EllMatrix& a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = a.rows;
  const double* xs = x.data();
  std::size_t r = 0;
  for (; r + 2 <= n; r += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t s = 0; s < a.width; ++s) {
      const std::size_t at = s * n + r;
      const float64x2_t v = vld1q_f64(a.val.data() + at);
      float64x2_t g = vdupq_n_f64(xs[a.col[at]]);
      g = vsetq_lane_f64(xs[a.col[at + 1]], g, 1);
      acc = vaddq_f64(acc, vmulq_f64(v, g));
    }
    vst1q_f64(y.data() + r, acc);
  }
  for (; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t s = 0; s < a.width; ++s) {
      const double p = a.val[s * n + r] * xs[a.col[s * n + r]];
      acc = acc + p;
    }
    y[r] = acc;
  }
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  float64x2_t acc = vdupq_n_f64(0.0);
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vabdq_f64(vld1q_f64(a.data() + i), vld1q_f64(b.data() + i)));
  double out = vaddvq_f64(acc);
  for (; i < n; ++i) out += std::abs(a[i] - b[i]);
  return out;
}

double sum(std::span<const double> x) {
  float64x2_t acc = vdupq_n_f64(0.0);
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x.data() + i));
  double out = vaddvq_f64(acc);
  for (; i < n; ++i) out += x[i];
  return out;
}

void scale(std::span<double> x, double factor) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x.data() + i, vmulq_n_f64(vld1q_f64(x.data() + i), factor));
  for (; i < n; ++i) x[i] *= factor;
}

}  // namespace cascade::kernels::neon
#endif
