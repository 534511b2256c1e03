#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Inner-loop kernels shared by the cost matrix, attention, transport and simplex code.
// Each kernel has a scalar reference implementation and vector variants; the active
// variant is picked once at startup from CPU features and can be pinned for testing.
namespace codi::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

/// Best variant available on this CPU.
Isa detect_isa();
/// Variant used by the dispatching entry points below.
Isa active_isa();
/// Pins the dispatching entry points to `isa`. Returns false when unavailable here.
bool set_active_isa(Isa isa);
bool isa_available(Isa isa);

/// sum_k x[k] * y[k]
double dot(std::span<const double> x, std::span<const double> y);
/// y[k] += alpha * x[k]
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// First k with cost[k] - potential[k] < bound, or cost.size() if none.
std::size_t first_below(std::span<const double> cost, std::span<const double> potential,
                        double bound);

// Per-variant entry points, exposed for equivalence tests.
namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
std::size_t first_below(const double* cost, const double* potential, std::size_t n, double bound);
}  // namespace scalar

namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
std::size_t first_below(const double* cost, const double* potential, std::size_t n, double bound);
}  // namespace avx2

namespace neon {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
std::size_t first_below(const double* cost, const double* potential, std::size_t n, double bound);
}  // namespace neon

}  // namespace codi::simd
