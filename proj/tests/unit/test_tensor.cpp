#include "doctest.h"

#include <cmath>

#include "cxrnet/tensor.hpp"
#include "support/oracles.hpp"

using namespace cxrnet;

namespace {

Tensor<double> random_matrix(std::size_t r, std::size_t c, Prng& prng) {
  Tensor<double> t({r, c});
  for (double& v : t.data()) v = prng.uniform(-1.0, 1.0);
  return t;
}

}  // namespace

TEST_CASE("zeros") {
  const Tensor<float> z = zeros<float>({2, 2});
  CHECK(z.shape() == Shape{2, 2});
  for (float v : z.data()) CHECK(v == 0.0f);
  CHECK(zeros<double>({1, 3}).shape() == Shape{1, 3});
  CHECK_THROWS_AS(zeros<float>({0}), ShapeError);
  CHECK_THROWS_AS(zeros<float>({}), ShapeError);
  CHECK_THROWS_AS(zeros<float>({3, 0, 2}), ShapeError);
}

TEST_CASE("construction checks data length") {
  CHECK_THROWS_AS(Tensor<float>({2, 2}, {1, 2, 3}), ShapeError);
  Tensor<float> t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.at(1, 2) == 6.0f);
  CHECK(t.at(0, 1) == 2.0f);
  CHECK_THROWS_AS(t.at(2, 0), ShapeError);
  CHECK_THROWS_AS(t.at(0), ShapeError);
}

TEST_CASE("reshape keeps data") {
  Tensor<float> t({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor<float> r = t.reshaped({3, 2});
  CHECK(r.at(2, 1) == 6.0f);
  CHECK_THROWS_AS(t.reshape({4, 2}), ShapeError);
  CHECK(Tensor<float>().empty());
}

TEST_CASE("matmul small cases") {
  const Tensor<double> eye({2, 2}, {1, 0, 0, 1});
  const Tensor<double> m({2, 2}, {1, 2, 3, 4});
  CHECK(matmul(eye, m) == m);
  const Tensor<float> c = matmul(Tensor<float>({1, 1}, {2}), Tensor<float>({1, 1}, {3}));
  CHECK(c.shape() == Shape{1, 1});
  CHECK(c[0] == 6.0f);
  CHECK_THROWS_AS(matmul(Tensor<double>({2, 3}), Tensor<double>({2, 3})), ShapeError);
  CHECK_THROWS_AS(matmul(Tensor<double>({6}), Tensor<double>({6, 1})), ShapeError);
}

TEST_CASE("matmul matches the triple-loop reference") {
  Prng prng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor<double> a = random_matrix(5, 7, prng);
    const Tensor<double> b = random_matrix(7, 3, prng);
    const Tensor<double> got = matmul(a, b);
    const Tensor<double> want = testing::naive_matmul(a, b);
    REQUIRE(got.shape() == Shape{5, 3});
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-12);
  }
}

TEST_CASE("matmul is associative") {
  Prng prng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_matrix(4, 6, prng);
    const auto b = random_matrix(6, 5, prng);
    const auto c = random_matrix(5, 3, prng);
    const auto left = matmul(matmul(a, b), c);
    const auto right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.size(); ++i) {
      const double scale = std::max({std::abs(left[i]), std::abs(right[i]), 1e-300});
      CHECK(std::abs(left[i] - right[i]) / scale <= 1e-9);
    }
  }
}

TEST_CASE("map and zip") {
  const Tensor<double> x({2, 3}, {1, -2, 3, -4, 5, -6});
  CHECK(map(x, [](double t) { return t; }) == x);
  CHECK(map(x, [](double) { return 0.0; }) == zeros<double>(x.shape()));
  const Tensor<double> sum =
      zip(Tensor<double>({1, 2}, {1, 2}), Tensor<double>({1, 2}, {3, 4}),
          [](double a, double b) { return a + b; });
  CHECK(sum == Tensor<double>({1, 2}, {4, 6}));
  CHECK_THROWS_AS(zip(x, Tensor<double>({3, 2}), [](double a, double) { return a; }),
                  ShapeError);
  CHECK_THROWS_AS(map(x, [](double t) { return std::log(t); }), NumericError);
}

TEST_CASE("cast and finiteness") {
  const Tensor<double> d({3}, {0.5, 1.5, -2.0});
  const Tensor<float> f = cast<float>(d);
  CHECK(f.shape() == d.shape());
  CHECK(f[1] == 1.5f);
  Tensor<float> bad({2});
  bad[1] = std::nanf("");
  CHECK_FALSE(all_finite(bad));
  CHECK_THROWS_AS(require_finite(bad, "x"), NumericError);
}

TEST_CASE("glorot_uniform bounds, reproducibility and mean") {
  const std::size_t fan_in = 300, fan_out = 100;
  const double L = std::sqrt(6.0 / (fan_in + fan_out));
  Prng a(5), b(5);
  const auto t = glorot_uniform<double>({100000}, fan_in, fan_out, a);
  const auto u = glorot_uniform<double>({100000}, fan_in, fan_out, b);
  CHECK(t == u);
  double mean = 0.0;
  for (double v : t.data()) {
    CHECK(v >= -L);
    CHECK(v <= L);
    mean += v;
  }
  mean /= 1e5;
  // Standard error of a U(-L, L) mean over 1e5 draws is L / sqrt(3e5).
  CHECK(std::abs(mean) <= 3.0 * L / std::sqrt(3e5));
  CHECK_THROWS_AS(glorot_uniform<float>({2}, 0, 1, a), InputError);
}

TEST_CASE("prng reproducibility and ranges") {
  Prng a(2024), b(2024), c(2025);
  bool differs = false;
  for (int i = 0; i < 10000; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs |= x != c.next_u64();
  }
  CHECK(differs);

  Prng p(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = p.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(p.below(7) < 7);
  }
  const Prng d1 = Prng::derive(9, {1, 2});
  Prng d2 = Prng::derive(9, {1, 2});
  Prng d3 = Prng::derive(9, {2, 1});
  Prng d1c = d1;
  CHECK(d1c.next_u64() == d2.next_u64());
  Prng d1d = d1;
  CHECK(d1d.next_u64() != d3.next_u64());
}

TEST_CASE("splitmix64 reference value") {
  // First output of SplitMix64 from state 0, as published with the algorithm.
  std::uint64_t state = 0;
  CHECK(splitmix64(state) == 0xe220a8397b1dcdafULL);
}
