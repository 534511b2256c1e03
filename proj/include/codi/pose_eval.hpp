#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "codi/errors.hpp"
#include "codi/tensor.hpp"

namespace codi {

using Point2 = std::array<double, 2>;

/// Joints normalized by image size, with per-joint detector confidence.
struct KeypointSet {
  std::string id;
  std::vector<Point2> points;
  std::vector<double> confidences;
};

inline constexpr double kDefaultTau = 0.7;

struct ProcrustesOptions {
  /// Restrict R to det(R) = +1 (flip the smallest singular direction).
  bool proper_rotation = false;
  /// Compare gamma * pbar_i R + mu_j against raw p_j instead of the normalized frame.
  bool literal_frame = false;
};

struct AlignmentResult {
  std::array<double, 4> rotation{};  // row-major 2x2, applied as pbar_i * R
  double scale = 0.0;
  Point2 mean_i{};
  Point2 mean_j{};
  double norm_i = 0.0;  // Frobenius norm of the centered sets
  double norm_j = 0.0;
  std::vector<Point2> aligned;     // scale * pbar_i * R
  std::vector<Point2> normalized_target;  // pbar_j
};

/// Joint indices whose confidence is >= tau in both sets. Fewer than three throws
/// InsufficientKeypointsError.
std::vector<std::size_t> common_joints(const KeypointSet& lhs, const KeypointSet& rhs, double tau);

/// common_joints, but throws InsufficientKeypointsError below three joints.
std::vector<std::size_t> filter_common(const KeypointSet& lhs, const KeypointSet& rhs, double tau);

/// Aligns p_i onto p_j: center, unit-normalize, rotation from the SVD of pbar_i^T pbar_j,
/// scale = trace of the (possibly sign-corrected) singular values.
AlignmentResult procrustes_align(std::span<const Point2> p_i, std::span<const Point2> p_j,
                                 bool proper_rotation = false);

/// Mean joint distance after alignment over the confidently detected common joints.
double pose_distance(const KeypointSet& lhs, const KeypointSet& rhs, double tau = kDefaultTau,
                     const ProcrustesOptions& options = {});

struct PairwiseResult {
  double value = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

/// Mean of f(i, j) over all unordered pairs i < j of `count` items. Pairs whose metric
/// throws InsufficientKeypointsError or DegenerateError are skipped and counted.
template <typename PairMetric>
PairwiseResult pairwise_average(std::size_t count, PairMetric&& f) {
  if (count < 2) throw ParameterError("pairwise_average needs at least two items");
  PairwiseResult r;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < count; ++i) {
    for (std::size_t j = i + 1; j < count; ++j) {
      try {
        total += f(i, j);
        ++r.evaluated;
      } catch (const InsufficientKeypointsError&) {
        ++r.skipped;
      } catch (const DegenerateError&) {
        ++r.skipped;
      }
    }
  }
  if (r.evaluated == 0) throw NoValidPairsError("every pair was skipped");
  r.value = total / static_cast<double>(r.evaluated);
  return r;
}

/// u = (1/K) sum_k u_k.
double dataset_average(std::span<const double> set_scores);

enum class ConsistencyKind { similarity, distance };
ConsistencyKind parse_consistency_kind(std::string_view text);

/// Pairwise cosine similarity (or 1 - cosine) of per-image embeddings.
PairwiseResult embedding_consistency(const TokenMatrix& embeddings, ConsistencyKind kind);

struct PoseSet {
  std::string id;
  std::vector<KeypointSet> images;
};

struct SetScore {
  std::string id;
  double score = 0.0;
  bool valid = false;  // false when every pair in the set was skipped
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

struct EvalReport {
  std::vector<SetScore> per_set;
  double overall = 0.0;
};

/// Pose-diversity score per set and averaged over sets with at least one valid pair.
EvalReport pose_diversity(std::span<const PoseSet> sets, double tau = kDefaultTau,
                          const ProcrustesOptions& options = {});

struct TauPoint {
  double tau = 0.0;
  double score = 0.0;
};

std::vector<TauPoint> tau_sweep(std::span<const PoseSet> sets, std::span<const double> taus,
                                const ProcrustesOptions& options = {});

/// Accepts {"images":[...]} (one set) or {"sets":[{"id":..., "images":[...]}, ...]}.
std::vector<PoseSet> parse_keypoints(const nlohmann::json& doc);
nlohmann::json keypoints_json(std::span<const PoseSet> sets);
nlohmann::json report_json(const EvalReport& report);

}  // namespace codi
