#include <immintrin.h>

#include "codi/simd.hpp"

namespace codi::simd::avx2 {

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k + 4), _mm256_loadu_pd(y + k + 4), acc1);
  }
  for (; k + 4 <= n; k += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k), acc0);
  }
  acc0 = _mm256_add_pd(acc0, acc1);
  const __m128d lo = _mm256_castpd256_pd128(acc0);
  const __m128d hi = _mm256_extractf128_pd(acc0, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  double acc = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
  for (; k < n; ++k) acc += x[k] * y[k];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(y + k, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
  }
  for (; k < n; ++k) y[k] += alpha * x[k];
}

// Subtraction and comparison are exact IEEE ops, so this returns the same index as
// the scalar scan.
std::size_t first_below(const double* cost, const double* potential, std::size_t n, double bound) {
  const __m256d b = _mm256_set1_pd(bound);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(cost + k), _mm256_loadu_pd(potential + k));
    const int bits = _mm256_movemask_pd(_mm256_cmp_pd(diff, b, _CMP_LT_OQ));
    if (bits != 0) return k + static_cast<std::size_t>(__builtin_ctz(static_cast<unsigned>(bits)));
  }
  for (; k < n; ++k) {
    if (cost[k] - potential[k] < bound) return k;
  }
  return n;
}

}  // namespace codi::simd::avx2
