#include "codi/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "codi/errors.hpp"
#include "codi/simd.hpp"

namespace codi {
namespace {

// Guards ceil() against products like 0.7 * 10 = 7.000000000000001.
constexpr double kCountSlack = 1e-9;

}  // namespace

void AttentionBundle::validate() const {
  const std::size_t d = queries.cols();
  for (const TokenMatrix* m : {&queries, &self_keys, &self_values, &ref_keys, &ref_values}) {
    if (m->rows() == 0) throw ShapeError("attention bundle matrices need at least one row");
  }
  if (self_keys.cols() != d || ref_keys.cols() != d) {
    throw ShapeError("query and key feature dimensions differ");
  }
  if (self_values.cols() != ref_values.cols()) {
    throw ShapeError("self and reference value dimensions differ");
  }
  if (self_values.cols() != d) throw ShapeError("value dimension differs from query dimension");
  if (self_keys.rows() != self_values.rows()) throw ShapeError("self keys and values differ in count");
  if (ref_keys.rows() != ref_values.rows()) {
    throw ShapeError("reference keys and values differ in count");
  }
}

SelectionSet select_top_alpha(std::span<const double> scores, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ParameterError("alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
  if (scores.empty()) throw ParameterError("select_top_alpha needs at least one score");
  for (double s : scores) {
    if (!std::isfinite(s)) throw ValidationError("saliency scores must be finite");
  }
  const std::size_t k = scores.size();
  const auto wanted = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(k) - kCountSlack));
  const std::size_t count = std::clamp<std::size_t>(wanted, 1, k);

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
  order.resize(count);
  std::ranges::sort(order);
  return SelectionSet{std::move(order), alpha, k};
}

AttentionMatrix cross_image_scores(const AttentionBundle& bundle) {
  bundle.validate();
  const std::size_t q = bundle.queries.rows();
  const std::size_t self_tokens = bundle.self_keys.rows();
  const std::size_t cols = self_tokens + bundle.ref_keys.rows();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(bundle.queries.cols()));

  AttentionMatrix a{q, cols, std::vector<double>(q * cols)};
  for (std::size_t i = 0; i < q; ++i) {
    double* row = a.values.data() + i * cols;
    const auto query = bundle.queries.row(i);
    for (std::size_t j = 0; j < cols; ++j) {
      const auto key = j < self_tokens ? bundle.self_keys.row(j) : bundle.ref_keys.row(j - self_tokens);
      row[j] = simd::dot(query, key) * inv_sqrt_d;
    }
    const double peak = *std::max_element(row, row + cols);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      row[j] = std::exp(row[j] - peak);
      total += row[j];
    }
    for (std::size_t j = 0; j < cols; ++j) row[j] /= total;
  }
  return a;
}

AttentionMatrix filter_and_renormalize(const AttentionMatrix& scores, const SelectionSet& selection,
                                       std::size_t self_tokens, Normalization normalization) {
  if (self_tokens > scores.cols || scores.cols - self_tokens != selection.reference_tokens) {
    throw ShapeError("attention has " + std::to_string(scores.cols) + " columns, expected " +
                     std::to_string(self_tokens) + " self + " +
                     std::to_string(selection.reference_tokens) + " reference");
  }
  std::vector<bool> keep(scores.cols, false);
  std::fill(keep.begin(), keep.begin() + static_cast<std::ptrdiff_t>(self_tokens), true);
  for (std::size_t idx : selection.indices) {
    if (idx >= selection.reference_tokens) throw ShapeError("selection index out of range");
    keep[self_tokens + idx] = true;
  }
  // Every column kept: rows are already stochastic.
  if (normalization == Normalization::retained &&
      std::all_of(keep.begin(), keep.end(), [](bool k) { return k; })) {
    return scores;
  }

  AttentionMatrix out{scores.rows, scores.cols, std::vector<double>(scores.values.size(), 0.0)};
  for (std::size_t i = 0; i < scores.rows; ++i) {
    const auto in = scores.row(i);
    double* row = out.values.data() + i * scores.cols;
    double mass = 0.0;
    for (std::size_t j = 0; j < scores.cols; ++j) {
      if (!keep[j]) continue;
      row[j] = in[j];
      if (normalization == Normalization::retained || j >= self_tokens) mass += in[j];
    }
    if (!(mass > 0.0)) {
      throw ValidationError("attention row " + std::to_string(i) + " has no retained mass");
    }
    for (std::size_t j = 0; j < scores.cols; ++j) row[j] /= mass;
  }
  return out;
}

TokenMatrix refine_attention(const AttentionBundle& bundle, const SelectionSet& selection,
                             Normalization normalization) {
  const auto weights = filter_and_renormalize(cross_image_scores(bundle), selection,
                                              bundle.self_keys.rows(), normalization);
  const std::size_t self_tokens = bundle.self_values.rows();
  TokenMatrix out(bundle.queries.rows(), bundle.self_values.cols());
  for (std::size_t i = 0; i < weights.rows; ++i) {
    const auto w = weights.row(i);
    for (std::size_t j = 0; j < weights.cols; ++j) {
      if (w[j] == 0.0) continue;
      const auto value = j < self_tokens ? bundle.self_values.row(j)
                                         : bundle.ref_values.row(j - self_tokens);
      simd::axpy(w[j], value, out.row(i));
    }
  }
  return out;
}

}  // namespace codi
