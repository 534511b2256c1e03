#include <atomic>
#include <cassert>

#include "codi/simd.hpp"

namespace codi::simd {
namespace {

struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  std::size_t (*first_below)(const double*, const double*, std::size_t, double);
};

constexpr KernelTable kScalar{scalar::dot, scalar::axpy, scalar::first_below};
#if defined(CODI_HAVE_AVX2)
constexpr KernelTable kAvx2{avx2::dot, avx2::axpy, avx2::first_below};
#endif
#if defined(CODI_HAVE_NEON)
constexpr KernelTable kNeon{neon::dot, neon::axpy, neon::first_below};
#endif

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return &kScalar;
    case Isa::avx2:
#if defined(CODI_HAVE_AVX2)
      return &kAvx2;
#else
      return nullptr;
#endif
    case Isa::neon:
#if defined(CODI_HAVE_NEON)
      return &kNeon;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{table_for(detect_isa())};
  return table;
}

std::atomic<Isa>& active_tag() {
  static std::atomic<Isa> tag{detect_isa()};
  return tag;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(CODI_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(CODI_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detect_isa() {
  if (isa_available(Isa::avx2)) return Isa::avx2;
  if (isa_available(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

Isa active_isa() { return active_tag().load(std::memory_order_relaxed); }

bool set_active_isa(Isa isa) {
  if (!isa_available(isa)) return false;
  active_table().store(table_for(isa), std::memory_order_relaxed);
  active_tag().store(isa, std::memory_order_relaxed);
  return true;
}

double dot(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  return active_table().load(std::memory_order_relaxed)->dot(x.data(), y.data(), x.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active_table().load(std::memory_order_relaxed)->axpy(alpha, x.data(), y.data(), x.size());
}

std::size_t first_below(std::span<const double> cost, std::span<const double> potential,
                        double bound) {
  assert(cost.size() == potential.size());
  return active_table().load(std::memory_order_relaxed)
      ->first_below(cost.data(), potential.data(), cost.size(), bound);
}

}  // namespace codi::simd
