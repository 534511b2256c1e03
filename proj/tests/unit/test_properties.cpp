#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "codi/attention.hpp"
#include "codi/ot.hpp"
#include "codi/pose_eval.hpp"
#include "codi/subject_mask.hpp"
#include "test_util.hpp"

using namespace codi;

namespace {

std::vector<double> simplex_point(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = e(rng) + 1e-3;
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (auto& x : v) x /= s;
  return v;
}

}  // namespace

TEST_SUITE("properties") {
  TEST_CASE("transport plans are feasible and consistent") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t m = 1 + rng() % 7;
      const std::size_t n = 1 + rng() % 7;
      const auto a = simplex_point(rng, m);
      const auto b = simplex_point(rng, n);
      std::vector<double> c(m * n);
      for (auto& x : c) x = std::uniform_real_distribution<double>(0, 2)(rng);
      const auto plan = solve_ot(a, b, CostMatrix{m, n, c});
      double objective = 0.0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        CHECK(plan.values[k] >= 0.0);
        objective += plan.values[k] * c[k];
      }
      CHECK(plan.objective == doctest::Approx(objective).epsilon(1e-12));
      const auto rs = plan.row_sums();
      const auto cs = plan.col_sums();
      for (std::size_t i = 0; i < m; ++i) CHECK(std::fabs(rs[i] - a[i]) <= 1e-12);
      for (std::size_t j = 0; j < n; ++j) CHECK(std::fabs(cs[j] - b[j]) <= 1e-12);

      // Reordering reference tokens does not change the optimum.
      std::vector<std::size_t> perm(m);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<double> pa(m), pc(m * n);
      for (std::size_t i = 0; i < m; ++i) {
        pa[i] = a[perm[i]];
        for (std::size_t j = 0; j < n; ++j) pc[i * n + j] = c[perm[i] * n + j];
      }
      CHECK(solve_ot(pa, b, CostMatrix{m, n, pc}).objective == doctest::Approx(plan.objective).epsilon(1e-10));

      // Barycentric weights per target token sum to one.
      const auto ones = transport_features(plan, TokenMatrix(m, 1, std::vector<double>(m, 1.0)));
      for (double v : ones.values()) CHECK(std::fabs(v - 1.0) <= 1e-12);
    }
  }

  TEST_CASE("otsu is invariant under power-of-two scaling") {
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> v(40);
      for (auto& x : v) x = u(rng);
      std::vector<double> scaled(v);
      for (auto& x : scaled) x *= 8.0;
      const auto r = otsu_threshold(v);
      const auto s = otsu_threshold(scaled);
      CHECK(r.bin == s.bin);
      CHECK(r.mask.bits == s.mask.bits);
      // Everything above the threshold is in the mask.
      for (std::size_t k = 0; k < v.size(); ++k) CHECK(r.mask.bits[k] == (v[k] > r.threshold || r.degenerate));
    }
  }

  TEST_CASE("selection keeps the highest scores and grows with alpha") {
    std::mt19937_64 rng(107);
    std::uniform_int_distribution<int> level(0, 5);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> s(1 + rng() % 12);
      for (auto& x : s) x = level(rng);
      std::vector<std::size_t> previous;
      for (double alpha : {0.1, 0.25, 0.5, 0.75, 1.0}) {
        const auto sel = select_top_alpha(s, alpha);
        CHECK(std::is_sorted(sel.indices.begin(), sel.indices.end()));
        double kept_min = INFINITY;
        for (auto i : sel.indices) kept_min = std::min(kept_min, s[i]);
        for (std::size_t i = 0; i < s.size(); ++i) {
          if (!std::binary_search(sel.indices.begin(), sel.indices.end(), i)) CHECK(s[i] <= kept_min);
        }
        CHECK(std::includes(sel.indices.begin(), sel.indices.end(), previous.begin(), previous.end()));
        previous = sel.indices;
      }
      CHECK(previous.size() == s.size());
    }
  }

  TEST_CASE("refined rows are stochastic for every selection") {
    std::mt19937_64 rng(109);
    for (int trial = 0; trial < 50; ++trial) {
      const AttentionBundle b{test::random_matrix(rng, 3, 4, -3, 3), test::random_matrix(rng, 2, 4, -3, 3),
                              test::random_matrix(rng, 2, 4), test::random_matrix(rng, 5, 4, -3, 3),
                              test::random_matrix(rng, 5, 4)};
      std::vector<double> sal(5);
      for (auto& x : sal) x = std::uniform_real_distribution<double>(0, 1)(rng);
      const auto a = cross_image_scores(b);
      for (double alpha : {0.2, 0.6, 1.0}) {
        for (auto norm : {Normalization::retained, Normalization::reference_only}) {
          const auto f = filter_and_renormalize(a, select_top_alpha(sal, alpha), 2, norm);
          for (std::size_t i = 0; i < f.rows; ++i) {
            double self = 0.0, ref = 0.0;
            for (std::size_t j = 0; j < f.cols; ++j) (j < 2 ? self : ref) += f(i, j);
            if (norm == Normalization::retained) {
              CHECK(self + ref == doctest::Approx(1.0).epsilon(1e-12));
            } else {
              CHECK(ref == doctest::Approx(1.0).epsilon(1e-12));
            }
          }
        }
      }
    }
  }

  TEST_CASE("pose distance is similarity invariant and bounded") {
    std::mt19937_64 rng(113);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t h = 3 + rng() % 15;
      KeypointSet a{"a", {}, std::vector<double>(h, 1.0)};
      KeypointSet b{"b", {}, std::vector<double>(h, 1.0)};
      for (std::size_t k = 0; k < h; ++k) {
        a.points.push_back({u(rng), u(rng)});
        b.points.push_back({u(rng), u(rng)});
      }
      const double d = pose_distance(a, b);
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);

      // Moving the source set by a similarity transform leaves the distance unchanged.
      const double theta = 3.0 * u(rng);
      const double s = 0.5 + std::fabs(u(rng)) * 3.0;
      KeypointSet moved = a;
      for (auto& p : moved.points) {
        p = {s * (std::cos(theta) * p[0] - std::sin(theta) * p[1]) + 4.0,
             s * (std::sin(theta) * p[0] + std::cos(theta) * p[1]) - 1.0};
      }
      CHECK(pose_distance(moved, b) == doctest::Approx(d).epsilon(1e-9));
      // Forbidding reflections can only raise the least-squares residual.
      const auto sq = [](const AlignmentResult& f) {
        double r = 0.0;
        for (std::size_t k = 0; k < f.aligned.size(); ++k) {
          r += std::pow(f.aligned[k][0] - f.normalized_target[k][0], 2) +
               std::pow(f.aligned[k][1] - f.normalized_target[k][1], 2);
        }
        return r;
      };
      CHECK(sq(procrustes_align(a.points, b.points, true)) >= sq(procrustes_align(a.points, b.points)) - 1e-12);
    }
  }
}
