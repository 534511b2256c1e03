#include "codi/subject_mask.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "codi/errors.hpp"

namespace codi {
namespace {

// Exact rational comparison is used while n * 255 * n and the cross products fit in
// 128 bits; past that the long double quotient is compared instead.
constexpr std::int64_t kExactLimit = std::int64_t{1} << 18;

struct Score {
  __int128 num = 0;  // (n*S0 - N0*S)^2
  __int128 den = 1;  // N0*N1
};

bool greater(const Score& lhs, const Score& rhs, bool exact) {
  if (exact) return lhs.num * rhs.den > rhs.num * lhs.den;
  const long double l = static_cast<long double>(lhs.num) / static_cast<long double>(lhs.den);
  const long double r = static_cast<long double>(rhs.num) / static_cast<long double>(rhs.den);
  return l > r;
}

}  // namespace

AttentionStack AttentionStack::from_tensor(const Tensor& t) {
  if (t.rank() != 3) {
    throw ShapeError("attention stack must be rank 3 (L, tokens, S), got rank " +
                     std::to_string(t.rank()));
  }
  t.validate();
  AttentionStack s;
  s.layers = t.shape[0];
  s.tokens = t.shape[1];
  s.subject_tokens = t.shape[2];
  s.weights.assign(t.data.begin(), t.data.end());
  return s;
}

AttentionStack AttentionStack::from_layers(std::span<const TokenMatrix> layers) {
  if (layers.empty()) throw ShapeError("attention stack needs at least one layer");
  AttentionStack s;
  s.layers = layers.size();
  s.tokens = layers.front().rows();
  s.subject_tokens = layers.front().cols();
  for (const auto& layer : layers) {
    if (layer.rows() != s.tokens || layer.cols() != s.subject_tokens) {
      throw ShapeError("attention layers differ in shape");
    }
    auto v = layer.values();
    s.weights.insert(s.weights.end(), v.begin(), v.end());
  }
  return s;
}

SubjectMask SubjectMask::from_bits(std::vector<bool> bits) {
  SubjectMask m;
  m.count = static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true));
  m.bits = std::move(bits);
  return m;
}

SubjectMask SubjectMask::all(std::size_t n) { return from_bits(std::vector<bool>(n, true)); }

SaliencyMap average_attention(const AttentionStack& stack) {
  if (stack.layers == 0 || stack.tokens == 0 || stack.subject_tokens == 0) {
    throw ShapeError("attention stack is empty");
  }
  if (stack.weights.size() != stack.layers * stack.tokens * stack.subject_tokens) {
    throw ShapeError("attention stack payload does not match its shape");
  }
  SaliencyMap out(stack.tokens, 0.0);
  const std::size_t layer_stride = stack.tokens * stack.subject_tokens;
  for (std::size_t l = 0; l < stack.layers; ++l) {
    for (std::size_t t = 0; t < stack.tokens; ++t) {
      const double* row = stack.weights.data() + l * layer_stride + t * stack.subject_tokens;
      for (std::size_t s = 0; s < stack.subject_tokens; ++s) out[t] += row[s];
    }
  }
  const double scale = 1.0 / static_cast<double>(stack.layers * stack.subject_tokens);
  for (auto& v : out) v *= scale;
  return out;
}

std::vector<int> histogram_bins(std::span<const double> values) {
  std::vector<int> bins(values.size(), 0);
  if (values.empty()) return bins;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return bins;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double normalized = (values[k] - *lo) / range;
    bins[k] = std::min(kOtsuBins - 1, static_cast<int>(std::floor(normalized * kOtsuBins)));
  }
  return bins;
}

OtsuResult otsu_threshold(std::span<const double> saliency) {
  if (saliency.empty()) throw ShapeError("otsu_threshold needs at least one value");
  for (double v : saliency) {
    if (!std::isfinite(v)) throw ValidationError("saliency contains non-finite values");
  }

  const auto [lo_it, hi_it] = std::minmax_element(saliency.begin(), saliency.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;

  OtsuResult result;
  result.threshold = lo;
  if (!(range > 0.0)) {
    result.mask = SubjectMask::all(saliency.size());
    result.degenerate = true;
    return result;
  }

  std::int64_t hist[kOtsuBins] = {};
  const auto bins = histogram_bins(saliency);
  for (int b : bins) ++hist[b];

  const auto n = static_cast<std::int64_t>(saliency.size());
  std::int64_t total_level = 0;
  for (int b = 0; b < kOtsuBins; ++b) total_level += b * hist[b];

  const bool exact = n <= kExactLimit;
  Score best{0, 1};
  int best_bin = -1;
  std::int64_t count0 = 0;
  std::int64_t level0 = 0;
  for (int k = 0; k < kOtsuBins - 1; ++k) {
    count0 += hist[k];
    level0 += k * hist[k];
    const std::int64_t count1 = n - count0;
    if (count0 == 0 || count1 == 0) continue;
    const __int128 diff = static_cast<__int128>(n) * level0 - static_cast<__int128>(count0) * total_level;
    const Score s{diff * diff, static_cast<__int128>(count0) * count1};
    if (best_bin < 0 || greater(s, best, exact)) {
      best = s;
      best_bin = k;
    }
  }

  if (best_bin < 0 || best.num == 0) {
    result.mask = SubjectMask::all(saliency.size());
    result.degenerate = true;
    return result;
  }

  const double cut = static_cast<double>(best_bin + 1) / kOtsuBins;
  std::vector<bool> bits(saliency.size());
  for (std::size_t t = 0; t < saliency.size(); ++t) bits[t] = (saliency[t] - lo) / range > cut;
  result.bin = best_bin;
  result.threshold = lo + cut * range;
  result.mask = SubjectMask::from_bits(std::move(bits));
  if (result.mask.count == 0) {
    result.mask = SubjectMask::all(saliency.size());
    result.degenerate = true;
  }
  return result;
}

TokenMatrix extract_subject(const TokenMatrix& x, const SubjectMask& mask) {
  if (mask.size() != x.rows()) {
    throw ShapeError("mask length " + std::to_string(mask.size()) + " does not match " +
                     std::to_string(x.rows()) + " token rows");
  }
  if (mask.count == 0) return x;
  TokenMatrix out(mask.count, x.cols());
  std::size_t r = 0;
  for (std::size_t t = 0; t < x.rows(); ++t) {
    if (!mask.bits[t]) continue;
    std::ranges::copy(x.row(t), out.row(r).begin());
    ++r;
  }
  return out;
}

std::vector<double> importance_weights(std::span<const double> saliency, const SubjectMask& mask) {
  if (mask.size() != saliency.size()) throw ShapeError("mask and saliency lengths differ");
  if (mask.count == 0) throw ParameterError("importance_weights requires a non-empty mask");
  double peak = -INFINITY;
  for (std::size_t t = 0; t < saliency.size(); ++t) {
    if (mask.bits[t]) peak = std::max(peak, saliency[t]);
  }
  std::vector<double> weights;
  weights.reserve(mask.count);
  double total = 0.0;
  for (std::size_t t = 0; t < saliency.size(); ++t) {
    if (!mask.bits[t]) continue;
    weights.push_back(std::exp(saliency[t] - peak));
    total += weights.back();
  }
  for (auto& w : weights) w /= total;
  return weights;
}

Tensor mask_tensor(const SubjectMask& mask) {
  std::vector<float> data(mask.size());
  for (std::size_t t = 0; t < mask.size(); ++t) data[t] = mask.bits[t] ? 1.0f : 0.0f;
  return Tensor({static_cast<std::uint32_t>(mask.size())}, std::move(data));
}

}  // namespace codi
