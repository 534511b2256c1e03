#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "codi/errors.hpp"
#include "codi/subject_mask.hpp"
#include "oracles.hpp"

using namespace codi;

namespace {

std::vector<bool> bits(std::initializer_list<int> v) {
  std::vector<bool> out;
  for (int b : v) out.push_back(b != 0);
  return out;
}

}  // namespace

TEST_SUITE("subject_mask") {
  TEST_CASE("average over layers and subject tokens") {
    const TokenMatrix single(2, 1, {0.2, 0.8});
    const auto one = average_attention(AttentionStack::from_layers(std::span(&single, 1)));
    CHECK(one == std::vector<double>{0.2, 0.8});

    // Token t holds [0,1] in layer 0 and [1,0] in layer 1.
    const std::vector<TokenMatrix> two{TokenMatrix(2, 2, {0, 1, 0, 1}), TokenMatrix(2, 2, {1, 0, 1, 0})};
    CHECK(average_attention(AttentionStack::from_layers(two)) == std::vector<double>{0.5, 0.5});

    const std::vector<TokenMatrix> mismatched{TokenMatrix(2, 1), TokenMatrix(3, 1)};
    CHECK_THROWS_AS(AttentionStack::from_layers(mismatched), ShapeError);
    CHECK_THROWS_AS(AttentionStack::from_tensor(Tensor({2, 2}, {1, 2, 3, 4})), ShapeError);
  }

  TEST_CASE("stack from tensor matches from layers") {
    const Tensor t({2, 3, 2}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    const auto s = AttentionStack::from_tensor(t);
    CHECK(s.layers == 2);
    CHECK(s.tokens == 3);
    CHECK(s.subject_tokens == 2);
    const auto avg = average_attention(s);
    CHECK(avg[0] == doctest::Approx((1 + 2 + 7 + 8) / 4.0));
    CHECK(avg[2] == doctest::Approx((5 + 6 + 11 + 12) / 4.0));
  }

  TEST_CASE("two-class separation") {
    const std::vector<double> v{0.1, 0.1, 0.9, 0.9};
    const auto r = otsu_threshold(v);
    CHECK_FALSE(r.degenerate);
    CHECK(r.mask.bits == bits({0, 0, 1, 1}));
    CHECK(r.mask.count == 2);
    CHECK(r.threshold > 0.1);
    CHECK(r.threshold < 0.9);
  }

  TEST_CASE("constant saliency gives an all-ones mask") {
    const std::vector<double> v(6, 0.42);
    const auto r = otsu_threshold(v);
    CHECK(r.degenerate);
    CHECK(r.bin == -1);
    CHECK(r.mask.count == 6);
  }

  TEST_CASE("histogram binning edges") {
    const std::vector<double> v{0.0, 0.5, 1.0, 255.0 / 256.0};
    CHECK(histogram_bins(v) == std::vector<int>{0, 128, 255, 255});
  }

  TEST_CASE("threshold equals the exhaustive scan") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> v(100);
      for (auto& x : v) x = trial % 2 ? u(rng) : u(rng) * u(rng);
      const auto r = otsu_threshold(v);
      CHECK(r.bin == oracle::exhaustive_otsu_bin(v));
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      const double edge = *lo + (r.bin + 1) / 256.0 * (*hi - *lo);
      CHECK(r.threshold == doctest::Approx(edge).epsilon(1e-12));
    }
  }

  TEST_CASE("extract_subject") {
    const TokenMatrix x(3, 2, {1, 2, 3, 4, 5, 6});
    CHECK(extract_subject(x, SubjectMask::all(3)) == x);
    CHECK(extract_subject(x, SubjectMask::from_bits(bits({1, 0, 1}))) == TokenMatrix(2, 2, {1, 2, 5, 6}));
    // An all-zero mask is repaired upstream; extraction treats it as all ones.
    CHECK(extract_subject(x, SubjectMask::from_bits(bits({0, 0, 0}))) == x);
    CHECK_THROWS_AS(extract_subject(x, SubjectMask::all(2)), ShapeError);
  }

  TEST_CASE("importance weights") {
    const std::vector<double> flat(5, 0.3);
    for (double w : importance_weights(flat, SubjectMask::all(5))) CHECK(w == doctest::Approx(0.2));

    const std::vector<double> logs{std::log(1.0), std::log(3.0)};
    const auto w = importance_weights(logs, SubjectMask::all(2));
    CHECK(w[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-14));

    const std::vector<double> masked{5.0, std::log(1.0), 9.0, std::log(3.0)};
    const auto wm = importance_weights(masked, SubjectMask::from_bits(bits({0, 1, 0, 1})));
    REQUIRE(wm.size() == 2);
    CHECK(wm[1] == doctest::Approx(0.75));

    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 20.0);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> s(30);
      for (auto& x : s) x = g(rng);
      const auto ws = importance_weights(s, otsu_threshold(s).mask);
      CHECK(std::accumulate(ws.begin(), ws.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  TEST_CASE("mask tensor") {
    const Tensor t = mask_tensor(SubjectMask::from_bits(bits({1, 0, 1})));
    CHECK(t.shape == std::vector<std::uint32_t>{3});
    CHECK(t.data == std::vector<float>{1, 0, 1});
  }
}
