#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "codi/subject_mask.hpp"
#include "codi/tensor.hpp"

namespace codi {

/// Dense (rows x cols) cost matrix; cost_matrix() fills it with cosine distances in [0, 2].
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

/// Coupling with row sums a (reference masses) and column sums b (target masses).
struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  double objective = 0.0;
  std::size_t pivots = 0;

  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
};

enum class TransportMode { barycentric, literal };

TransportMode parse_transport_mode(std::string_view text);
std::string_view to_string(TransportMode mode);

struct SimplexOptions {
  /// Masses are perturbed by this amount to avoid degenerate pivots; 0 disables.
  double perturbation = 1e-12;
  /// Entering cells need reduced cost below -tolerance.
  double tolerance = 1e-12;
  std::size_t max_pivots = 50'000'000;
};

/// C(i,j) = 1 - cos(ref_i, target_j), clamped to [0, 2].
CostMatrix cost_matrix(const TokenMatrix& reference, const TokenMatrix& target);

/// Exact transportation-problem solve by network simplex (north-west-corner start,
/// Bland's pivoting rule). Returns an optimal basic plan.
TransportPlan solve_ot(std::span<const double> a, std::span<const double> b, const CostMatrix& cost,
                       const SimplexOptions& options = {});

/// literal: row j = sum_i T(i,j) ref_i.  barycentric: same divided by the column mass.
TokenMatrix transport_features(const TransportPlan& plan, const TokenMatrix& reference,
                               TransportMode mode = TransportMode::barycentric);

/// Scatter `transported` rows into the masked positions of `features`.
TokenMatrix compose_features(const TokenMatrix& features, const SubjectMask& mask,
                             const TokenMatrix& transported);

/// s_i = sum_n sum_j T_n(i,j) (1 - C_n(i,j)).
std::vector<double> saliency_scores(std::span<const TransportPlan> plans,
                                    std::span<const CostMatrix> costs);

Tensor plan_tensor(const TransportPlan& plan);
Tensor cost_tensor(const CostMatrix& cost);
CostMatrix cost_from_tensor(const Tensor& t);
TransportPlan plan_from_tensor(const Tensor& t);

}  // namespace codi
