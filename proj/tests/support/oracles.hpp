#pragma once

// Independent reference computations used by the unit and acceptance suites. None of
// these call into the code paths they check.

#include <cstdint>
#include <span>
#include <vector>

#include "codi/attention.hpp"
#include "codi/pose_eval.hpp"

namespace codi::oracle {

/// Min-cost flow by successive shortest paths (Bellman-Ford) on integer supplies.
/// Returns sum(flow * cost) / scale.
double ssp_transport_cost(std::span<const std::int64_t> supply, std::span<const std::int64_t> demand,
                          std::span<const double> cost, double scale);

/// Minimum of sum_i cost[i][perm[i]] over all permutations of an n x n matrix.
double permutation_minimum(std::span<const double> cost, std::size_t n);

/// Otsu bin by rescanning every boundary and recounting both classes from the raw values.
int exhaustive_otsu_bin(std::span<const double> values);

struct ScanResult {
  double distance = 0.0;  // mean joint distance at the best grid rotation
  double residual = 0.0;  // squared Frobenius residual at that rotation
};

/// Grid search over rotation angle (step 1e-4 rad) with the closed-form optimal scale,
/// in the centered unit-norm frame.
ScanResult rotation_scan(std::span<const Point2> p_i, std::span<const Point2> p_j, bool allow_reflection);

/// Dense evaluation of softmax, top-alpha filtering and the value product.
std::vector<double> dense_refine(const AttentionBundle& bundle, std::span<const std::size_t> selected,
                                 bool reference_only_normalization = false);

/// Least-squares convex weights w with sum w = 1 reproducing `point` from `rows`.
/// Returns the weights; `residual` receives the reconstruction error.
std::vector<double> convex_weights(const std::vector<std::vector<double>>& rows,
                                   std::span<const double> point, double& residual);

}  // namespace codi::oracle
