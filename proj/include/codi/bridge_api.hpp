#pragma once

// Flat-buffer entry points for host-language bindings. Arrays arrive as strided views;
// they are checked for shape, contiguity and finiteness before any kernel runs.

#include <cstddef>
#include <span>
#include <vector>

#include "codi/attention.hpp"
#include "codi/ot.hpp"

namespace codi::bridge {

struct ArrayView {
  const double* data = nullptr;
  std::vector<std::size_t> shape;
  std::vector<std::ptrdiff_t> strides;  // in elements; empty means C-contiguous

  bool contiguous() const;
  std::size_t size() const;
  /// Copies into C order, for callers that want the copy fallback.
  std::vector<double> materialize() const;
};

ArrayView contiguous_view(std::span<const double> data, std::vector<std::size_t> shape);

/// Row-major plan of shape (a.size, b.size).
std::vector<double> solve_ot(const ArrayView& a, const ArrayView& b, const ArrayView& cost);

std::vector<double> transport_features(const ArrayView& plan, const ArrayView& reference,
                                       TransportMode mode = TransportMode::barycentric);

std::vector<std::size_t> select_top_alpha(const ArrayView& scores, double alpha);

/// Output of shape (queries.rows, d).
std::vector<double> refine_attention(const ArrayView& queries, const ArrayView& self_keys,
                                     const ArrayView& self_values, const ArrayView& ref_keys,
                                     const ArrayView& ref_values, const ArrayView& saliency,
                                     double alpha, Normalization normalization = Normalization::retained);

}  // namespace codi::bridge
