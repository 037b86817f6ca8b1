// Built with -mavx2; only reached after runtime detection.
#include <immintrin.h>

#include <cmath>

#include "cascade/kernels.hpp"

namespace cascade::kernels::avx2 {

namespace {

double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void ell_multiply(const EllMatrix& a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = a.rows;
  const double* xs = x.data();
  std::size_t r = 0;
  for (; r + 4 <= n; r += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t s = 0; s < a.width; ++s) {
      const __m256d v = _mm256_loadu_pd(a.val.data() + s * n + r);
      const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a.col.data() + s * n + r));
      const __m256d g = _mm256_i32gather_pd(xs, idx, 8);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(v, g));
    }
    _mm256_storeu_pd(y.data() + r, acc);
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
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i + 4), _mm256_loadu_pd(b.data() + i + 4));
    acc0 = _mm256_add_pd(acc0, _mm256_andnot_pd(sign, d0));
    acc1 = _mm256_add_pd(acc1, _mm256_andnot_pd(sign, d1));
  }
  double acc = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += std::abs(a[i] - b[i]);
  return acc;
}

double sum(std::span<const double> x) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x.data() + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x.data() + i + 4));
  }
  double acc = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

void scale(std::span<double> x, double factor) {
  const __m256d f = _mm256_set1_pd(factor);
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x.data() + i, _mm256_mul_pd(_mm256_loadu_pd(x.data() + i), f));
  for (; i < n; ++i) x[i] *= factor;
}

}  // namespace cascade::kernels::avx2
