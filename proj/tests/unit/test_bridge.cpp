#include <doctest.h>

#include <random>
#include <sstream>

#include "codi/bridge_api.hpp"
#include "codi/errors.hpp"
#include "codi/commands.hpp"
#include "test_util.hpp"

using namespace codi;

namespace {

// Values that survive the f32 file format unchanged.
std::vector<double> f32_values(std::mt19937_64& rng, std::size_t n, float lo, float hi) {
  std::uniform_real_distribution<float> u(lo, hi);
  std::vector<double> out(n);
  for (auto& x : out) x = u(rng);
  return out;
}

std::vector<float> as_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

void write(const std::vector<double>& v, std::vector<std::uint32_t> shape, const std::filesystem::path& p) {
  write_tensor(Tensor(std::move(shape), as_float(v)), p);
}

int run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

}  // namespace

TEST_SUITE("bridge") {
  TEST_CASE("solve_ot parity with the file path") {
    test::TempDir dir("bridge_ot");
    std::mt19937_64 rng(81);
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t m = 1 + rng() % 4;
      const std::size_t n = 1 + rng() % 4;
      // Uniform masses on both sides keep the f32 marginals exact enough to balance.
      const std::vector<double> a(m, static_cast<double>(1.0f / static_cast<float>(m)));
      const std::vector<double> b(n, static_cast<double>(1.0f / static_cast<float>(n)));
      const auto c = f32_values(rng, m * n, 0.0f, 2.0f);
      write(a, {static_cast<std::uint32_t>(m)}, dir / "a.cft");
      write(b, {static_cast<std::uint32_t>(n)}, dir / "b.cft");
      write(c, {static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(n)}, dir / "c.cft");
      REQUIRE(run_cli({"ot", "solve", "--a", (dir / "a.cft").string(), "--b", (dir / "b.cft").string(), "--cost",
                   (dir / "c.cft").string(), "--out", (dir / "plan.cft").string()}) == 0);
      const auto plan = bridge::solve_ot(bridge::contiguous_view(a, {m}), bridge::contiguous_view(b, {n}),
                                         bridge::contiguous_view(c, {m, n}));
      CHECK(read_tensor(dir / "plan.cft").data == as_float(plan));
    }
  }

  TEST_CASE("refine parity with the file path") {
    test::TempDir dir("bridge_refine");
    std::mt19937_64 rng(83);
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t q = 3, kn = 3, kid = 4, d = 5;
      const auto qn = f32_values(rng, q * d, -1, 1);
      const auto k_n = f32_values(rng, kn * d, -1, 1);
      const auto v_n = f32_values(rng, kn * d, -1, 1);
      const auto k_id = f32_values(rng, kid * d, -1, 1);
      const auto v_id = f32_values(rng, kid * d, -1, 1);
      const auto sal = f32_values(rng, kid, 0, 1);
      write(qn, {3, 5}, dir / "Qn.cft");
      write(k_n, {3, 5}, dir / "Kn.cft");
      write(v_n, {3, 5}, dir / "Vn.cft");
      write(k_id, {4, 5}, dir / "Kid.cft");
      write(v_id, {4, 5}, dir / "Vid.cft");
      write(sal, {4}, dir / "sal.cft");
      REQUIRE(run_cli({"refine", "--bundle-dir", dir.path().string(), "--saliency", (dir / "sal.cft").string(),
                   "--alpha", "0.5", "--out", (dir / "out.cft").string()}) == 0);
      const auto out = bridge::refine_attention(
          bridge::contiguous_view(qn, {q, d}), bridge::contiguous_view(k_n, {kn, d}),
          bridge::contiguous_view(v_n, {kn, d}), bridge::contiguous_view(k_id, {kid, d}),
          bridge::contiguous_view(v_id, {kid, d}), bridge::contiguous_view(sal, {kid}), 0.5);
      CHECK(read_tensor(dir / "out.cft").data == as_float(out));
    }
  }

  TEST_CASE("views") {
    const std::vector<double> buf{1, 2, 3, 4, 5, 6};
    const auto v = bridge::contiguous_view(buf, {2, 3});
    CHECK(v.contiguous());
    CHECK(v.size() == 6);
    // Transposed view of the same buffer.
    const bridge::ArrayView t{buf.data(), {3, 2}, {1, 3}};
    CHECK_FALSE(t.contiguous());
    CHECK(t.materialize() == std::vector<double>{1, 4, 2, 5, 3, 6});
    CHECK_THROWS_AS(bridge::contiguous_view(buf, {4, 2}), ShapeError);
  }

  TEST_CASE("non-contiguous and malformed input is rejected") {
    const std::vector<double> mass{0.5, 0.5};
    const std::vector<double> cost{0, 1, 1, 0};
    const bridge::ArrayView strided_cost{cost.data(), {2, 2}, {1, 2}};
    CHECK_THROWS_AS(bridge::solve_ot(bridge::contiguous_view(mass, {2}), bridge::contiguous_view(mass, {2}), strided_cost),
                    ValidationError);
    CHECK_THROWS_AS(bridge::solve_ot(bridge::contiguous_view(mass, {2}), bridge::contiguous_view(mass, {2}),
                                     bridge::contiguous_view(cost, {4})),
                    ShapeError);
    const std::vector<double> nan{0.5, std::nan("")};
    CHECK_THROWS_AS(bridge::select_top_alpha(bridge::contiguous_view(nan, {2}), 0.5), ValidationError);
    CHECK_THROWS_AS(bridge::select_top_alpha(bridge::ArrayView{}, 0.5), ValidationError);
    CHECK(bridge::select_top_alpha(bridge::contiguous_view(mass, {2}), 1.0).size() == 2);
  }

  TEST_CASE("transport through the bridge") {
    const std::vector<double> plan{0.5, 0.0, 0.0, 0.5};
    const std::vector<double> ref{1, 2, 3, 4};
    const auto out = bridge::transport_features(bridge::contiguous_view(plan, {2, 2}), bridge::contiguous_view(ref, {2, 2}));
    CHECK(out == ref);
  }
}
