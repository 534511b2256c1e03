#include <arm_neon.h>

#include "codi/simd.hpp"

namespace codi::simd::neon {

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + k), vld1q_f64(y + k));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + k + 2), vld1q_f64(y + k + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; k < n; ++k) acc += x[k] * y[k];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    vst1q_f64(y + k, vfmaq_f64(vld1q_f64(y + k), a, vld1q_f64(x + k)));
  }
  for (; k < n; ++k) y[k] += alpha * x[k];
}

std::size_t first_below(const double* cost, const double* potential, std::size_t n, double bound) {
  const float64x2_t b = vdupq_n_f64(bound);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const uint64x2_t lt = vcltq_f64(vsubq_f64(vld1q_f64(cost + k), vld1q_f64(potential + k)), b);
    if (vgetq_lane_u64(lt, 0) != 0) return k;
    if (vgetq_lane_u64(lt, 1) != 0) return k + 1;
  }
  for (; k < n; ++k) {
    if (cost[k] - potential[k] < bound) return k;
  }
  return n;
}

}  // namespace codi::simd::neon
