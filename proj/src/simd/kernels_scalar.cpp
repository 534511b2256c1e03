#include "codi/simd.hpp"

namespace codi::simd::scalar {

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += x[k] * y[k];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

std::size_t first_below(const double* cost, const double* potential, std::size_t n, double bound) {
  for (std::size_t k = 0; k < n; ++k) {
    if (cost[k] - potential[k] < bound) return k;
  }
  return n;
}

}  // namespace codi::simd::scalar
