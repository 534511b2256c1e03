#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "codi/errors.hpp"
#include "codi/ot.hpp"
#include "codi/simd.hpp"

namespace codi {

std::vector<double> TransportPlan::row_sums() const {
  std::vector<double> out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (double t : row(i)) out[i] += t;
  }
  return out;
}

std::vector<double> TransportPlan::col_sums() const {
  std::vector<double> out(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[j] += (*this)(i, j);
  }
  return out;
}

TransportMode parse_transport_mode(std::string_view text) {
  if (text == "barycentric") return TransportMode::barycentric;
  if (text == "literal") return TransportMode::literal;
  throw ParameterError("unknown transport mode '" + std::string(text) +
                       "' (expected barycentric or literal)");
}

std::string_view to_string(TransportMode mode) {
  return mode == TransportMode::literal ? "literal" : "barycentric";
}

CostMatrix cost_matrix(const TokenMatrix& reference, const TokenMatrix& target) {
  if (reference.cols() != target.cols()) {
    throw ShapeError("feature dimensions differ: " + std::to_string(reference.cols()) + " vs " +
                     std::to_string(target.cols()));
  }
  if (reference.empty() || target.empty()) throw ShapeError("cost_matrix needs non-empty inputs");

  const auto norms = [](const TokenMatrix& x, const char* which) {
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      out[r] = std::sqrt(simd::dot(x.row(r), x.row(r)));
      if (!(out[r] > 0.0) || !std::isfinite(out[r])) {
        throw DegenerateError(std::string("zero-norm ") + which + " feature row " +
                              std::to_string(r));
      }
    }
    return out;
  };
  const auto ref_norm = norms(reference, "reference");
  const auto tgt_norm = norms(target, "target");

  CostMatrix c;
  c.rows = reference.rows();
  c.cols = target.rows();
  c.values.resize(c.rows * c.cols);
  for (std::size_t i = 0; i < c.rows; ++i) {
    for (std::size_t j = 0; j < c.cols; ++j) {
      const double cosine = simd::dot(reference.row(i), target.row(j)) / (ref_norm[i] * tgt_norm[j]);
      c.values[i * c.cols + j] = std::clamp(1.0 - cosine, 0.0, 2.0);
    }
  }
  return c;
}

TokenMatrix transport_features(const TransportPlan& plan, const TokenMatrix& reference,
                               TransportMode mode) {
  if (plan.rows != reference.rows()) {
    throw ShapeError("plan has " + std::to_string(plan.rows) + " rows, reference has " +
                     std::to_string(reference.rows()));
  }
  std::vector<double> scale(plan.cols, 1.0);
  if (mode == TransportMode::barycentric) {
    const auto mass = plan.col_sums();
    for (std::size_t j = 0; j < plan.cols; ++j) {
      if (!(mass[j] > 0.0)) {
        throw ValidationError("barycentric transport: target token " + std::to_string(j) +
                              " receives no mass");
      }
      scale[j] = mass[j];
    }
  }
  TokenMatrix out(plan.cols, reference.cols());
  for (std::size_t i = 0; i < plan.rows; ++i) {
    for (std::size_t j = 0; j < plan.cols; ++j) {
      const double t = plan(i, j);
      if (t == 0.0) continue;
      const double w = mode == TransportMode::barycentric ? t / scale[j] : t;
      simd::axpy(w, reference.row(i), out.row(j));
    }
  }
  return out;
}

TokenMatrix compose_features(const TokenMatrix& features, const SubjectMask& mask,
                             const TokenMatrix& transported) {
  if (mask.size() != features.rows()) throw ShapeError("mask length does not match feature rows");
  const bool everything = mask.count == 0;
  const std::size_t expected = everything ? features.rows() : mask.count;
  if (transported.rows() != expected || transported.cols() != features.cols()) {
    throw ShapeError("transported features are " + std::to_string(transported.rows()) + "x" +
                     std::to_string(transported.cols()) + ", expected " +
                     std::to_string(expected) + "x" + std::to_string(features.cols()));
  }
  TokenMatrix out = features;
  std::size_t r = 0;
  for (std::size_t t = 0; t < features.rows(); ++t) {
    if (!everything && !mask.bits[t]) continue;
    std::ranges::copy(transported.row(r++), out.row(t).begin());
  }
  return out;
}

std::vector<double> saliency_scores(std::span<const TransportPlan> plans,
                                    std::span<const CostMatrix> costs) {
  if (plans.empty() || plans.size() != costs.size()) {
    throw ShapeError("saliency_scores needs equally many plans and costs (at least one)");
  }
  const std::size_t rows = plans.front().rows;
  std::vector<double> scores(rows, 0.0);
  for (std::size_t n = 0; n < plans.size(); ++n) {
    const auto& plan = plans[n];
    const auto& cost = costs[n];
    if (plan.rows != rows || cost.rows != rows || cost.cols != plan.cols) {
      throw ShapeError("plan/cost pair " + std::to_string(n) + " has inconsistent dimensions");
    }
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < plan.cols; ++j) scores[i] += plan(i, j) * (1.0 - cost(i, j));
    }
  }
  return scores;
}

Tensor plan_tensor(const TransportPlan& plan) {
  return Tensor({static_cast<std::uint32_t>(plan.rows), static_cast<std::uint32_t>(plan.cols)},
                std::vector<float>(plan.values.begin(), plan.values.end()));
}

Tensor cost_tensor(const CostMatrix& cost) {
  return Tensor({static_cast<std::uint32_t>(cost.rows), static_cast<std::uint32_t>(cost.cols)},
                std::vector<float>(cost.values.begin(), cost.values.end()));
}

CostMatrix cost_from_tensor(const Tensor& t) {
  if (t.rank() != 2) throw ShapeError("cost matrix must be a rank-2 tensor");
  return CostMatrix{t.shape[0], t.shape[1], std::vector<double>(t.data.begin(), t.data.end())};
}

TransportPlan plan_from_tensor(const Tensor& t) {
  if (t.rank() != 2) throw ShapeError("transport plan must be a rank-2 tensor");
  TransportPlan plan;
  plan.rows = t.shape[0];
  plan.cols = t.shape[1];
  plan.values.assign(t.data.begin(), t.data.end());
  return plan;
}

}  // namespace codi
