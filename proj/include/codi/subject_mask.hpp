#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "codi/tensor.hpp"

namespace codi {

/// Layer stack of unnormalized image-to-subject-token attention, shape (L, tokens, S).
struct AttentionStack {
  std::size_t layers = 0;
  std::size_t tokens = 0;
  std::size_t subject_tokens = 0;
  std::vector<double> weights;  // [l][t][s]

  static AttentionStack from_tensor(const Tensor& t);
  /// Builds a stack from per-layer (tokens x S) matrices; throws ShapeError on mismatch.
  static AttentionStack from_layers(std::span<const TokenMatrix> layers);
};

/// Per-token relevance; raw averaged attention, any finite value.
using SaliencyMap = std::vector<double>;

struct SubjectMask {
  std::vector<bool> bits;
  std::size_t count = 0;

  static SubjectMask from_bits(std::vector<bool> bits);
  static SubjectMask all(std::size_t n);
  std::size_t size() const { return bits.size(); }
};

struct OtsuResult {
  double threshold = 0.0;  // in saliency units
  int bin = -1;            // last histogram bin of the background class, -1 when degenerate
  SubjectMask mask;
  bool degenerate = false;  // mask was repaired to all ones
};

inline constexpr int kOtsuBins = 256;

/// Mean over layers and subject tokens: out[t] = 1/(L*S) sum_l sum_s W_l[t,s].
SaliencyMap average_attention(const AttentionStack& stack);

/// Histogram bin (0..255) of each value after min-max normalization. All zeros if max == min.
std::vector<int> histogram_bins(std::span<const double> values);

/// Otsu threshold over a 256-bin histogram of min-max normalized values.
/// Membership is value > threshold; degenerate inputs yield an all-ones mask.
OtsuResult otsu_threshold(std::span<const double> saliency);

/// Rows of x whose mask bit is set, in token order. An empty mask selects every row.
TokenMatrix extract_subject(const TokenMatrix& x, const SubjectMask& mask);

/// Softmax (temperature 1) over the masked saliencies.
std::vector<double> importance_weights(std::span<const double> saliency, const SubjectMask& mask);

/// Mask tensor of 0.0 / 1.0 values for inspection.
Tensor mask_tensor(const SubjectMask& mask);

}  // namespace codi
