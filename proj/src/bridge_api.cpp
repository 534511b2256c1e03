#include "codi/bridge_api.hpp"

#include <cmath>
#include <string>

#include "codi/errors.hpp"

namespace codi::bridge {
namespace {

std::span<const double> checked(const ArrayView& v, std::size_t rank, const char* name) {
  if (v.data == nullptr) throw ValidationError(std::string(name) + ": null buffer");
  if (v.shape.size() != rank) {
    throw ShapeError(std::string(name) + ": expected rank " + std::to_string(rank) + ", got " +
                     std::to_string(v.shape.size()));
  }
  if (!v.contiguous()) throw ValidationError(std::string(name) + ": array is not C-contiguous");
  std::span<const double> flat(v.data, v.size());
  for (double x : flat) {
    if (!std::isfinite(x)) throw ValidationError(std::string(name) + ": non-finite value");
  }
  return flat;
}

TokenMatrix matrix(const ArrayView& v, const char* name) {
  const auto flat = checked(v, 2, name);
  return TokenMatrix(v.shape[0], v.shape[1], std::vector<double>(flat.begin(), flat.end()));
}

}  // namespace

bool ArrayView::contiguous() const {
  if (strides.empty()) return true;
  if (strides.size() != shape.size()) return false;
  std::ptrdiff_t expected = 1;
  for (std::size_t k = shape.size(); k-- > 0;) {
    if (shape[k] > 1 && strides[k] != expected) return false;
    expected *= static_cast<std::ptrdiff_t>(shape[k]);
  }
  return true;
}

std::size_t ArrayView::size() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::vector<double> ArrayView::materialize() const {
  std::vector<double> out(size());
  if (contiguous()) {
    std::copy(data, data + out.size(), out.begin());
    return out;
  }
  std::vector<std::size_t> index(shape.size(), 0);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::ptrdiff_t offset = 0;
    for (std::size_t k = 0; k < shape.size(); ++k) offset += static_cast<std::ptrdiff_t>(index[k]) * strides[k];
    out[flat] = data[offset];
    for (std::size_t k = shape.size(); k-- > 0;) {
      if (++index[k] < shape[k]) break;
      index[k] = 0;
    }
  }
  return out;
}

ArrayView contiguous_view(std::span<const double> data, std::vector<std::size_t> shape) {
  ArrayView v{data.data(), std::move(shape), {}};
  if (v.size() != data.size()) throw ShapeError("view shape does not match buffer length");
  return v;
}

std::vector<double> solve_ot(const ArrayView& a, const ArrayView& b, const ArrayView& cost) {
  const auto av = checked(a, 1, "a");
  const auto bv = checked(b, 1, "b");
  const auto cv = checked(cost, 2, "cost");
  const CostMatrix c{cost.shape[0], cost.shape[1], std::vector<double>(cv.begin(), cv.end())};
  return codi::solve_ot(av, bv, c).values;
}

std::vector<double> transport_features(const ArrayView& plan, const ArrayView& reference,
                                       TransportMode mode) {
  const auto pv = checked(plan, 2, "plan");
  TransportPlan p;
  p.rows = plan.shape[0];
  p.cols = plan.shape[1];
  p.values.assign(pv.begin(), pv.end());
  auto out = codi::transport_features(p, matrix(reference, "reference"), mode);
  auto v = out.values();
  return {v.begin(), v.end()};
}

std::vector<std::size_t> select_top_alpha(const ArrayView& scores, double alpha) {
  return codi::select_top_alpha(checked(scores, 1, "scores"), alpha).indices;
}

std::vector<double> refine_attention(const ArrayView& queries, const ArrayView& self_keys,
                                     const ArrayView& self_values, const ArrayView& ref_keys,
                                     const ArrayView& ref_values, const ArrayView& saliency,
                                     double alpha, Normalization normalization) {
  const AttentionBundle bundle{matrix(queries, "queries"), matrix(self_keys, "self_keys"),
                               matrix(self_values, "self_values"), matrix(ref_keys, "ref_keys"),
                               matrix(ref_values, "ref_values")};
  const auto selection = codi::select_top_alpha(checked(saliency, 1, "saliency"), alpha);
  auto out = codi::refine_attention(bundle, selection, normalization);
  auto v = out.values();
  return {v.begin(), v.end()};
}

}  // namespace codi::bridge
