#include "codi/pose_eval.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "codi/simd.hpp"

namespace codi {
namespace {

constexpr std::size_t kMinJoints = 3;
constexpr double kDegenerateNorm = 1e-12;

using Points = Eigen::Matrix<double, Eigen::Dynamic, 2>;

Points to_matrix(std::span<const Point2> p) {
  Points m(static_cast<Eigen::Index>(p.size()), 2);
  for (std::size_t k = 0; k < p.size(); ++k) {
    m(static_cast<Eigen::Index>(k), 0) = p[k][0];
    m(static_cast<Eigen::Index>(k), 1) = p[k][1];
  }
  return m;
}

std::vector<Point2> to_points(const Points& m) {
  std::vector<Point2> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index k = 0; k < m.rows(); ++k) out[static_cast<std::size_t>(k)] = {m(k, 0), m(k, 1)};
  return out;
}

std::vector<Point2> pick(const KeypointSet& kp, std::span<const std::size_t> indices) {
  std::vector<Point2> out;
  out.reserve(indices.size());
  for (auto k : indices) out.push_back(kp.points[k]);
  return out;
}

void check_keypoints(const KeypointSet& kp) {
  if (kp.points.empty() || kp.points.size() != kp.confidences.size()) {
    throw ShapeError("keypoint set '" + kp.id + "' needs matching, non-empty points and confidences");
  }
}

}  // namespace

std::vector<std::size_t> common_joints(const KeypointSet& lhs, const KeypointSet& rhs, double tau) {
  check_keypoints(lhs);
  check_keypoints(rhs);
  if (lhs.points.size() != rhs.points.size()) {
    throw ShapeError("keypoint sets '" + lhs.id + "' and '" + rhs.id + "' differ in joint count");
  }
  std::vector<std::size_t> common;
  for (std::size_t k = 0; k < lhs.points.size(); ++k) {
    if (lhs.confidences[k] >= tau && rhs.confidences[k] >= tau) common.push_back(k);
  }
  return common;
}

std::vector<std::size_t> filter_common(const KeypointSet& lhs, const KeypointSet& rhs, double tau) {
  auto common = common_joints(lhs, rhs, tau);
  if (common.size() < kMinJoints) {
    throw InsufficientKeypointsError("only " + std::to_string(common.size()) +
                                     " joints pass tau in both '" + lhs.id + "' and '" + rhs.id + "'");
  }
  return common;
}

AlignmentResult procrustes_align(std::span<const Point2> p_i, std::span<const Point2> p_j,
                                 bool proper_rotation) {
  if (p_i.size() != p_j.size()) throw ShapeError("procrustes_align needs equally many points");
  if (p_i.size() < kMinJoints) throw InsufficientKeypointsError("procrustes_align needs >= 3 points");

  const Points a = to_matrix(p_i);
  const Points b = to_matrix(p_j);
  const Eigen::RowVector2d mu_a = a.colwise().mean();
  const Eigen::RowVector2d mu_b = b.colwise().mean();
  Points a_bar = a.rowwise() - mu_a;
  Points b_bar = b.rowwise() - mu_b;
  const double norm_a = a_bar.norm();
  const double norm_b = b_bar.norm();
  if (!(norm_a > kDegenerateNorm) || !(norm_b > kDegenerateNorm)) {
    throw DegenerateError("keypoints are coincident; shape has no extent");
  }
  a_bar /= norm_a;
  b_bar /= norm_b;

  // pbar_i^T pbar_j = U S V^T; R = U V^T maximizes tr(R^T pbar_i^T pbar_j).
  const Eigen::Matrix2d m = a_bar.transpose() * b_bar;
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix2d d = Eigen::Matrix2d::Identity();
  if (proper_rotation && (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(1, 1) = -1.0;
  const Eigen::Matrix2d r = svd.matrixU() * d * svd.matrixV().transpose();
  const double trace = (d * svd.singularValues().asDiagonal()).trace();

  AlignmentResult out;
  out.rotation = {r(0, 0), r(0, 1), r(1, 0), r(1, 1)};
  out.scale = (b_bar.norm() / a_bar.norm()) * trace;
  out.mean_i = {mu_a(0), mu_a(1)};
  out.mean_j = {mu_b(0), mu_b(1)};
  out.norm_i = norm_a;
  out.norm_j = norm_b;
  out.aligned = to_points(out.scale * a_bar * r);
  out.normalized_target = to_points(b_bar);
  return out;
}

double pose_distance(const KeypointSet& lhs, const KeypointSet& rhs, double tau,
                     const ProcrustesOptions& options) {
  const auto common = filter_common(lhs, rhs, tau);
  const auto p_i = pick(lhs, common);
  const auto p_j = pick(rhs, common);
  const auto fit = procrustes_align(p_i, p_j, options.proper_rotation);

  double total = 0.0;
  for (std::size_t k = 0; k < common.size(); ++k) {
    double dx;
    double dy;
    if (options.literal_frame) {
      dx = fit.aligned[k][0] + fit.mean_j[0] - p_j[k][0];
      dy = fit.aligned[k][1] + fit.mean_j[1] - p_j[k][1];
    } else {
      dx = fit.aligned[k][0] - fit.normalized_target[k][0];
      dy = fit.aligned[k][1] - fit.normalized_target[k][1];
    }
    total += std::hypot(dx, dy);
  }
  return total / static_cast<double>(common.size());
}

double dataset_average(std::span<const double> set_scores) {
  if (set_scores.empty()) throw ParameterError("dataset_average needs at least one set score");
  return std::accumulate(set_scores.begin(), set_scores.end(), 0.0) /
         static_cast<double>(set_scores.size());
}

ConsistencyKind parse_consistency_kind(std::string_view text) {
  if (text == "similarity") return ConsistencyKind::similarity;
  if (text == "distance") return ConsistencyKind::distance;
  throw ParameterError("unknown consistency kind '" + std::string(text) +
                       "' (expected similarity or distance)");
}

PairwiseResult embedding_consistency(const TokenMatrix& embeddings, ConsistencyKind kind) {
  std::vector<double> norms(embeddings.rows());
  for (std::size_t r = 0; r < embeddings.rows(); ++r) {
    norms[r] = std::sqrt(simd::dot(embeddings.row(r), embeddings.row(r)));
    if (!(norms[r] > 0.0)) {
      throw ValidationError("embedding row " + std::to_string(r) + " has zero norm");
    }
  }
  return pairwise_average(embeddings.rows(), [&](std::size_t i, std::size_t j) {
    const double cosine = simd::dot(embeddings.row(i), embeddings.row(j)) / (norms[i] * norms[j]);
    return kind == ConsistencyKind::similarity ? cosine : 1.0 - cosine;
  });
}

EvalReport pose_diversity(std::span<const PoseSet> sets, double tau, const ProcrustesOptions& options) {
  if (sets.empty()) throw ParameterError("pose_diversity needs at least one image set");
  EvalReport report;
  std::vector<double> valid_scores;
  for (const auto& set : sets) {
    SetScore s{set.id};
    try {
      const auto r = pairwise_average(set.images.size(), [&](std::size_t i, std::size_t j) {
        return pose_distance(set.images[i], set.images[j], tau, options);
      });
      s.score = r.value;
      s.valid = true;
      s.evaluated = r.evaluated;
      s.skipped = r.skipped;
      valid_scores.push_back(r.value);
    } catch (const NoValidPairsError&) {
      s.skipped = set.images.size() * (set.images.size() - 1) / 2;
    }
    report.per_set.push_back(std::move(s));
  }
  if (valid_scores.empty()) throw NoValidPairsError("no image set has a valid pair at this tau");
  report.overall = dataset_average(valid_scores);
  return report;
}

std::vector<TauPoint> tau_sweep(std::span<const PoseSet> sets, std::span<const double> taus,
                                const ProcrustesOptions& options) {
  if (taus.empty()) throw ParameterError("tau_sweep needs at least one threshold");
  std::vector<TauPoint> out;
  for (double tau : taus) out.push_back({tau, pose_diversity(sets, tau, options).overall});
  return out;
}

std::vector<PoseSet> parse_keypoints(const nlohmann::json& doc) {
  const auto parse_images = [](const nlohmann::json& images) {
    if (!images.is_array()) throw FormatError("'images' must be an array");
    std::vector<KeypointSet> out;
    for (const auto& img : images) {
      KeypointSet kp;
      kp.id = img.value("id", std::to_string(out.size()));
      if (!img.contains("keypoints") || !img["keypoints"].is_array()) {
        throw FormatError("image '" + kp.id + "' lacks a keypoints array");
      }
      for (const auto& joint : img["keypoints"]) {
        if (!joint.is_array() || joint.size() != 3 || !joint[0].is_number() ||
            !joint[1].is_number() || !joint[2].is_number()) {
          throw FormatError("image '" + kp.id + "': keypoints must be [x, y, conf] triples");
        }
        const double x = joint[0].get<double>();
        const double y = joint[1].get<double>();
        const double c = joint[2].get<double>();
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(c)) {
          throw ValidationError("image '" + kp.id + "': non-finite keypoint");
        }
        kp.points.push_back({x, y});
        kp.confidences.push_back(c);
      }
      if (kp.points.empty()) throw FormatError("image '" + kp.id + "' has no keypoints");
      out.push_back(std::move(kp));
    }
    return out;
  };

  if (!doc.is_object()) throw FormatError("keypoint document must be a JSON object");
  std::vector<PoseSet> sets;
  if (doc.contains("sets")) {
    if (!doc["sets"].is_array()) throw FormatError("'sets' must be an array");
    for (const auto& s : doc["sets"]) {
      if (!s.is_object() || !s.contains("images")) throw FormatError("each set needs 'images'");
      sets.push_back({s.value("id", std::to_string(sets.size())), parse_images(s["images"])});
    }
  } else if (doc.contains("images")) {
    sets.push_back({doc.value("id", std::string("0")), parse_images(doc["images"])});
  } else {
    throw FormatError("keypoint document needs 'images' or 'sets'");
  }
  return sets;
}

nlohmann::json keypoints_json(std::span<const PoseSet> sets) {
  const auto images = [](const PoseSet& set) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& kp : set.images) {
      nlohmann::json joints = nlohmann::json::array();
      for (std::size_t k = 0; k < kp.points.size(); ++k) {
        joints.push_back({kp.points[k][0], kp.points[k][1], kp.confidences[k]});
      }
      arr.push_back({{"id", kp.id}, {"keypoints", joints}});
    }
    return arr;
  };
  if (sets.size() == 1) return {{"images", images(sets.front())}};
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : sets) out.push_back({{"id", s.id}, {"images", images(s)}});
  return {{"sets", out}};
}

nlohmann::json report_json(const EvalReport& report) {
  nlohmann::json per_set = nlohmann::json::array();
  for (const auto& s : report.per_set) {
    per_set.push_back({{"id", s.id},
                       {"score", s.valid ? nlohmann::json(s.score) : nlohmann::json(nullptr)},
                       {"evaluated_pairs", s.evaluated},
                       {"skipped_pairs", s.skipped}});
  }
  return {{"per_set", per_set}, {"overall", report.overall}};
}

}  // namespace codi
