#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "codi/tensor.hpp"

namespace codi {

/// Queries of one target plus its own keys/values and the reference's keys/values.
struct AttentionBundle {
  TokenMatrix queries;
  TokenMatrix self_keys;
  TokenMatrix self_values;
  TokenMatrix ref_keys;
  TokenMatrix ref_values;

  /// Throws ShapeError unless all five share the feature dimension, keys and values
  /// agree in row count, and every matrix has at least one row.
  void validate() const;
};

/// Reference-token indices kept during refinement, sorted ascending.
struct SelectionSet {
  std::vector<std::size_t> indices;
  double alpha = 1.0;
  std::size_t reference_tokens = 0;

  bool contains_all() const { return indices.size() == reference_tokens; }
};

enum class Normalization {
  retained,        // self columns plus selected reference columns, rows stay stochastic
  reference_only,  // divide by the selected reference mass only
};

/// Dense row-major (rows x cols) matrix of attention weights.
struct AttentionMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

inline constexpr double kDefaultAlpha = 0.5;

/// Top ceil(alpha * k) indices by score (at least one), ties to the lower index.
SelectionSet select_top_alpha(std::span<const double> scores, double alpha);

/// softmax(Q [K_self ; K_ref]^T / sqrt(d)), one row per query.
AttentionMatrix cross_image_scores(const AttentionBundle& bundle);

/// Zeroes reference columns outside `selection` and renormalizes each row.
AttentionMatrix filter_and_renormalize(const AttentionMatrix& scores, const SelectionSet& selection,
                                       std::size_t self_tokens,
                                       Normalization normalization = Normalization::retained);

/// filter_and_renormalize(cross_image_scores(b)) * [V_self ; V_ref].
TokenMatrix refine_attention(const AttentionBundle& bundle, const SelectionSet& selection,
                             Normalization normalization = Normalization::retained);

}  // namespace codi
