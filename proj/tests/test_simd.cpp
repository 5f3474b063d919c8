#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "dot/simd/kernels.hpp"

using namespace dot;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar and dispatched kernels agree") {
  std::mt19937_64 rng(7);
  // Odd lengths exercise the vector tails.
  for (std::size_t n : {std::size_t(1), std::size_t(3), std::size_t(8),
                        std::size_t(17), std::size_t(1000), std::size_t(1031)}) {
    const auto a = random_vec(rng, n);
    const auto b = random_vec(rng, n);

    simd::force_scalar(true);
    const double dot_ref = simd::dot(a.data(), b.data(), n);
    const double ss_ref = simd::sum_squares(a.data(), a.size());
    std::vector<double> y_ref = b;
    simd::axpy(0.37, a.data(), y_ref.data(), n);
    simd::force_scalar(false);

    const double dot_fast = simd::dot(a.data(), b.data(), n);
    const double ss_fast = simd::sum_squares(a.data(), a.size());
    std::vector<double> y_fast = b;
    simd::axpy(0.37, a.data(), y_fast.data(), n);

    CHECK(dot_fast == doctest::Approx(dot_ref).epsilon(1e-13));
    CHECK(ss_fast == doctest::Approx(ss_ref).epsilon(1e-13));
    for (std::size_t i = 0; i < n; ++i)
      CHECK(y_fast[i] == doctest::Approx(y_ref[i]).epsilon(1e-13));
  }
}

TEST_CASE("gemv variants agree across implementations") {
  std::mt19937_64 rng(11);
  const std::size_t m = 13, n = 37;
  const auto a = random_vec(rng, m * n);
  const auto x = random_vec(rng, n);
  const auto xt = random_vec(rng, m);

  simd::force_scalar(true);
  std::vector<double> y_ref(m, 0.0), yt_ref(n, 0.0);
  simd::gemv(a.data(), x.data(), y_ref.data(), m, n);
  simd::gemv_t(a.data(), xt.data(), yt_ref.data(), m, n);
  simd::force_scalar(false);

  std::vector<double> y(m, 0.0), yt(n, 0.0);
  simd::gemv(a.data(), x.data(), y.data(), m, n);
  simd::gemv_t(a.data(), xt.data(), yt.data(), m, n);

  for (std::size_t i = 0; i < m; ++i)
    CHECK(y[i] == doctest::Approx(y_ref[i]).epsilon(1e-13));
  for (std::size_t i = 0; i < n; ++i)
    CHECK(yt[i] == doctest::Approx(yt_ref[i]).epsilon(1e-13));
}

TEST_CASE("gemv matches naive matrix product") {
  std::mt19937_64 rng(3);
  const std::size_t m = 5, n = 9;
  const auto a = random_vec(rng, m * n);
  const auto x = random_vec(rng, n);
  std::vector<double> y(m, 0.0);
  simd::gemv(a.data(), x.data(), y.data(), m, n);
  for (std::size_t r = 0; r < m; ++r) {
    double expect = 0.0;
    for (std::size_t c = 0; c < n; ++c) expect += a[r * n + c] * x[c];
    CHECK(y[r] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("scale is exact elementwise") {
  std::mt19937_64 rng(5);
  auto v = random_vec(rng, 101);
  auto expect = v;
  for (double& x : expect) x *= -2.5;
  simd::scale(-2.5, v.data(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == expect[i]);
}
