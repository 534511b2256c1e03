#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "codi/errors.hpp"
#include "codi/pose_eval.hpp"
#include "codi/synth.hpp"
#include "oracles.hpp"

using namespace codi;

namespace {

KeypointSet make(std::string id, std::vector<Point2> pts, double conf = 1.0) {
  KeypointSet k{std::move(id), std::move(pts), {}};
  k.confidences.assign(k.points.size(), conf);
  return k;
}

std::vector<Point2> transform(const std::vector<Point2>& p, double deg, double s, Point2 t) {
  const double a = deg * std::numbers::pi / 180.0;
  std::vector<Point2> out;
  for (const auto& q : p) {
    out.push_back({s * (std::cos(a) * q[0] - std::sin(a) * q[1]) + t[0],
                   s * (std::sin(a) * q[0] + std::cos(a) * q[1]) + t[1]});
  }
  return out;
}

const std::vector<Point2> kPentagon{{0.1, 0.3}, {1.2, -0.4}, {2.0, 0.9}, {0.8, 1.7}, {-0.5, 1.1}};

}  // namespace

TEST_SUITE("pose_eval") {
  TEST_CASE("confidence intersection") {
    const auto all = common_joints(make("a", kPentagon), make("b", kPentagon), 0.7);
    CHECK(all.size() == 5);

    KeypointSet i = make("i", {{0, 0}, {1, 0}, {0, 1}});
    KeypointSet j = make("j", {{0, 0}, {1, 0}, {0, 1}});
    i.confidences = {0.9, 0.5, 0.8};
    j.confidences = {0.9, 0.9, 0.6};
    CHECK(common_joints(i, j, 0.7) == std::vector<std::size_t>{0});
    CHECK_THROWS_AS(filter_common(i, j, 0.7), InsufficientKeypointsError);

    i.confidences = {1.0, 1.0, 0.0};
    j.confidences = {0.0, 0.0, 1.0};
    CHECK(common_joints(i, j, 0.7).empty());
    CHECK_THROWS_AS(filter_common(i, j, 0.7), InsufficientKeypointsError);
    CHECK_THROWS_AS(common_joints(i, make("k", kPentagon), 0.7), ShapeError);
  }

  TEST_CASE("identity alignment") {
    const auto fit = procrustes_align(kPentagon, kPentagon);
    CHECK(fit.scale == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.rotation[0] == doctest::Approx(1.0));
    CHECK(fit.rotation[1] == doctest::Approx(0.0));
    CHECK(fit.rotation[3] == doctest::Approx(1.0));
    for (std::size_t k = 0; k < kPentagon.size(); ++k) {
      CHECK(fit.aligned[k][0] == doctest::Approx(fit.normalized_target[k][0]).epsilon(1e-12));
      CHECK(fit.aligned[k][1] == doctest::Approx(fit.normalized_target[k][1]).epsilon(1e-12));
    }
  }

  TEST_CASE("similarity transforms are recovered") {
    const auto moved = transform(kPentagon, 37.0, 2.5, {0.1, 0.2});
    const auto fit = procrustes_align(kPentagon, moved);
    double residual = 0.0;
    for (std::size_t k = 0; k < moved.size(); ++k) {
      residual += std::hypot(fit.aligned[k][0] - fit.normalized_target[k][0],
                             fit.aligned[k][1] - fit.normalized_target[k][1]);
    }
    CHECK(residual <= 1e-9);
    CHECK(pose_distance(make("a", kPentagon), make("b", moved)) <= 1e-9);
    CHECK(pose_distance(make("a", kPentagon), make("b", kPentagon)) <= 1e-12);
    // Literal frame compares in the target's raw coordinates.
    const ProcrustesOptions literal{false, true};
    CHECK(pose_distance(make("a", kPentagon), make("b", kPentagon), 0.7, literal) >= 0.0);
  }

  TEST_CASE("square against its reflection") {
    const std::vector<Point2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const std::vector<Point2> mirror{{0, 0}, {1, 0}, {1, -1}, {0, -1}};
    const ProcrustesOptions proper{true, false};
    const double d = pose_distance(make("a", square), make("b", mirror), 0.7, proper);
    // Both singular values are equal, so the best proper fit has zero scale and every
    // normalized corner sits 0.5 from the origin.
    CHECK(d == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d == doctest::Approx(oracle::rotation_scan(square, mirror, false).distance).epsilon(1e-4));
    CHECK(pose_distance(make("a", square), make("b", mirror)) <= 1e-12);
    CHECK(oracle::rotation_scan(square, mirror, true).distance <= 1e-4);
  }

  TEST_CASE("random pairs agree with the rotation scan") {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<Point2> a(5), b(5);
      for (auto& p : a) p = {u(rng), u(rng)};
      for (auto& p : b) p = {u(rng), u(rng)};
      const double d = pose_distance(make("a", a), make("b", b), 0.7, {true, false});
      CHECK(d == doctest::Approx(oracle::rotation_scan(a, b, false).distance).epsilon(1e-4));
      const double reflected = pose_distance(make("a", a), make("b", b));
      CHECK(reflected == doctest::Approx(oracle::rotation_scan(a, b, true).distance).epsilon(1e-4));
      MESSAGE("asymmetry |d(i,j) - d(j,i)| = " << std::fabs(d - pose_distance(make("b", b), make("a", a), 0.7, {true, false})));
    }
  }

  TEST_CASE("coincident points are degenerate") {
    const std::vector<Point2> dot{{1, 1}, {1, 1}, {1, 1}};
    CHECK_THROWS_AS(procrustes_align(dot, kPentagon), ShapeError);
    CHECK_THROWS_AS(procrustes_align(dot, std::vector<Point2>{{0, 0}, {1, 0}, {0, 1}}), DegenerateError);
  }

  TEST_CASE("pairwise averaging") {
    CHECK(pairwise_average(2, [](std::size_t i, std::size_t j) { return 10.0 * i + j; }).value == 1.0);
    CHECK(pairwise_average(7, [](std::size_t, std::size_t) { return 0.3; }).value == doctest::Approx(0.3));
    std::size_t calls = 0;
    const auto r = pairwise_average(5, [&](std::size_t, std::size_t) { return double(++calls); });
    CHECK(calls == 10);
    CHECK(r.evaluated == 10);
    CHECK(r.value == 5.5);
    CHECK_THROWS_AS(pairwise_average(1, [](std::size_t, std::size_t) { return 0.0; }), ParameterError);

    const auto skipping = pairwise_average(3, [](std::size_t i, std::size_t) -> double {
      if (i == 0) throw InsufficientKeypointsError("skip");
      return 2.0;
    });
    CHECK(skipping.skipped == 2);
    CHECK(skipping.value == 2.0);
    CHECK_THROWS_AS(pairwise_average(3, [](std::size_t, std::size_t) -> double { throw DegenerateError("x"); }),
                    NoValidPairsError);
  }

  TEST_CASE("dataset average") {
    const std::vector<double> one{0.1};
    const std::vector<double> two{0.0, 0.2};
    const std::vector<double> same(4, 0.37);
    CHECK(dataset_average(one) == 0.1);
    CHECK(dataset_average(two) == 0.1);
    CHECK(dataset_average(same) == doctest::Approx(0.37));
    CHECK_THROWS_AS(dataset_average(std::vector<double>{}), ParameterError);
  }

  TEST_CASE("embedding consistency") {
    CHECK(embedding_consistency(TokenMatrix(3, 2, {1, 2, 1, 2, 2, 4}), ConsistencyKind::similarity).value ==
          doctest::Approx(1.0));
    CHECK(embedding_consistency(TokenMatrix(2, 2, {1, 0, 0, 3}), ConsistencyKind::similarity).value ==
          doctest::Approx(0.0));
    CHECK(embedding_consistency(TokenMatrix(2, 2, {1, 2, -1, -2}), ConsistencyKind::similarity).value ==
          doctest::Approx(-1.0));
    CHECK(embedding_consistency(TokenMatrix(2, 2, {1, 2, -1, -2}), ConsistencyKind::distance).value ==
          doctest::Approx(2.0));
    CHECK_THROWS_AS(embedding_consistency(TokenMatrix(2, 2, {0, 0, 1, 1}), ConsistencyKind::similarity),
                    ValidationError);
    CHECK_THROWS_AS(parse_consistency_kind("l2"), ParameterError);
  }

  TEST_CASE("pose diversity report") {
    const std::vector<PoseSet> sets{synth::keypoints(1), synth::keypoints(2)};
    const auto report = pose_diversity(sets, 0.0);
    REQUIRE(report.per_set.size() == 2);
    CHECK(report.per_set[0].valid);
    CHECK(report.per_set[0].evaluated == 10);
    CHECK(report.overall == doctest::Approx((report.per_set[0].score + report.per_set[1].score) / 2.0));

    // A set whose images share no confident joints is reported as null.
    PoseSet blind{"blind", {make("x", kPentagon, 0.1), make("y", kPentagon, 0.1)}};
    const std::vector<PoseSet> mixed{sets[0], blind};
    const auto r = pose_diversity(mixed, 0.0 + 0.5);
    CHECK_FALSE(r.per_set[1].valid);
    CHECK(r.per_set[1].skipped == 1);
    CHECK(report_json(r)["per_set"][1]["score"].is_null());
    const std::vector<PoseSet> only_blind{blind};
    CHECK_THROWS_AS(pose_diversity(only_blind, 0.5), NoValidPairsError);
  }

  TEST_CASE("tau sweep") {
    const std::vector<PoseSet> sets{synth::keypoints(3)};
    const std::vector<double> single{0.4};
    CHECK(tau_sweep(sets, single).front().score == pose_diversity(sets, 0.4).overall);

    PoseSet confident = synth::keypoints(4);
    for (auto& img : confident.images) img.confidences.assign(img.points.size(), 1.0);
    const std::vector<PoseSet> cs{confident};
    const std::vector<double> taus{0.1, 0.5, 0.9, 1.0};
    const auto sweep = tau_sweep(cs, taus);
    for (const auto& p : sweep) CHECK(p.score == sweep.front().score);
  }

  TEST_CASE("low-confidence joints carry the variation") {
    // Joints 0-4 are a fixed shape under a similarity transform; joints 5-7 move freely
    // and are only seen with confidence 0.5.
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PoseSet set{"s", {}};
    for (int img = 0; img < 4; ++img) {
      auto pts = transform(kPentagon, 20.0 * img, 1.0 + 0.3 * img, {0.5 * img, -0.2 * img});
      std::vector<double> conf(5, 0.95);
      for (int k = 0; k < 3; ++k) {
        pts.push_back({u(rng), u(rng)});
        conf.push_back(0.5);
      }
      set.images.push_back({"i" + std::to_string(img), pts, conf});
    }
    const std::vector<PoseSet> sets{set};
    const std::vector<double> taus{0.3, 0.5, 0.6, 0.9};
    const auto sweep = tau_sweep(sets, taus);
    CHECK(sweep[0].score > 1e-3);
    CHECK(sweep[1].score == sweep[0].score);
    CHECK(sweep[2].score <= 1e-9);
    CHECK(sweep[3].score <= 1e-9);
  }

  TEST_CASE("keypoint json round trip") {
    const std::vector<PoseSet> one{synth::keypoints(5, 3, 4)};
    const auto doc = keypoints_json(one);
    CHECK(doc.contains("images"));
    const auto back = parse_keypoints(doc);
    REQUIRE(back.size() == 1);
    CHECK(back[0].images.size() == 3);
    CHECK(back[0].images[2].points == one[0].images[2].points);

    const std::vector<PoseSet> two{synth::keypoints(5), synth::keypoints(6)};
    CHECK(parse_keypoints(keypoints_json(two)).size() == 2);

    CHECK_THROWS_AS(parse_keypoints(nlohmann::json::array()), FormatError);
    CHECK_THROWS_AS(parse_keypoints({{"images", {{{"keypoints", {{1, 2}}}}}}}), FormatError);
  }
}
