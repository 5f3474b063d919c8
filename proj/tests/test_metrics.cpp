#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "dot/metrics.hpp"

using namespace dot;

namespace {

std::vector<double> random_volume(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// Line-by-line transcription of the reference CNR procedure.
double cnr_oracle(const std::vector<double>& cestimate,
                  const std::vector<double>& clabel) {
  std::vector<std::size_t> ind_roi, ind_back;
  for (std::size_t i = 0; i < clabel.size(); ++i)
    (clabel[i] != 0.0 ? ind_roi : ind_back).push_back(i);
  const double a_roi = double(ind_roi.size()) / double(clabel.size());
  const double a_back = double(ind_back.size()) / double(clabel.size());
  auto mean_of = [&](const std::vector<std::size_t>& idx) {
    double s = 0;
    for (auto i : idx) s += cestimate[i];
    return s / double(idx.size());
  };
  auto var_of = [&](const std::vector<std::size_t>& idx, double mean) {
    double s = 0;
    for (auto i : idx) s += (cestimate[i] - mean) * (cestimate[i] - mean);
    return s / double(idx.size() - 1);
  };
  const double mean_roi = mean_of(ind_roi);
  const double mean_back = mean_of(ind_back);
  const double var_roi = var_of(ind_roi, mean_roi);
  const double var_back = var_of(ind_back, mean_back);
  return (mean_roi - mean_back) /
         std::sqrt(a_roi * var_roi + a_back * var_back);
}

}  // namespace

TEST_CASE("rmse basics") {
  std::vector<double> a = {1, 2, 3, 4};
  CHECK(rmse(a, a) == 0.0);
  std::vector<double> b = a;
  for (double& x : b) x += 0.1;
  CHECK(rmse(b, a) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK_THROWS_AS(rmse(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("rmse matches elementwise oracle and is symmetric") {
  std::mt19937_64 rng(1);
  const auto x = random_volume(rng, 500);
  const auto y = random_volume(rng, 500);
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  CHECK(rmse(x, y) == doctest::Approx(std::sqrt(s / 500.0)).epsilon(1e-12));
  CHECK(rmse(x, y) == rmse(y, x));
}

TEST_CASE("pearson affine behavior") {
  std::vector<double> label = {0.0, 1.0, 3.0, 2.0, 5.0};
  std::vector<double> scaled = label;
  for (double& x : scaled) x = 2.0 * x + 1.0;
  CHECK(pearson(scaled, label) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> negated = label;
  for (double& x : negated) x = -x;
  CHECK(pearson(negated, label) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 1, 1}, label),
                  std::invalid_argument);
}

TEST_CASE("pearson matches covariance formula") {
  std::vector<double> a = {1.0, 4.0, 2.0, 8.0};
  std::vector<double> b = {3.0, 1.0, 5.0, 2.0};
  const double ma = 3.75, mb = 2.75;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  CHECK(pearson(a, b) ==
        doctest::Approx(cov / std::sqrt(va * vb)).epsilon(1e-12));
}

TEST_CASE("ssim perfect and shifted") {
  std::mt19937_64 rng(2);
  const auto vol = random_volume(rng, 9 * 9 * 9);
  CHECK(ssim(vol, vol, 9, 9, 9) == doctest::Approx(1.0).epsilon(1e-12));
  auto shifted = vol;
  for (double& x : shifted) x += 10.0;
  CHECK(ssim(shifted, vol, 9, 9, 9) < 1.0);
}

TEST_CASE("ssim matches direct per-window oracle") {
  std::mt19937_64 rng(3);
  const int n = 9;
  const auto est = random_volume(rng, n * n * n);
  const auto lab = random_volume(rng, n * n * n);
  const SsimConfig cfg;

  double lmin = 1e300, lmax = -1e300;
  for (double v : lab) {
    lmin = std::min(lmin, v);
    lmax = std::max(lmax, v);
  }
  const double range = lmax - lmin;
  const double c1 = cfg.k1 * range * cfg.k1 * range;
  const double c2 = cfg.k2 * range * cfg.k2 * range;
  auto at = [&](const std::vector<double>& v, int x, int y, int z) {
    return v[(std::size_t(z) * n + y) * n + x];
  };
  double total = 0.0;
  const int half = cfg.window / 2;
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        double wsum = 0, mx = 0, my = 0, vx = 0, vy = 0, cxy = 0;
        auto weight = [&](int dx, int dy, int dz) {
          return std::exp(-(dx * dx + dy * dy + dz * dz) /
                          (2.0 * cfg.sigma * cfg.sigma));
        };
        for (int dz = -half; dz <= half; ++dz)
          for (int dy = -half; dy <= half; ++dy)
            for (int dx = -half; dx <= half; ++dx) {
              const int xx = x + dx, yy = y + dy, zz = z + dz;
              if (xx < 0 || xx >= n || yy < 0 || yy >= n || zz < 0 || zz >= n)
                continue;
              const double w = weight(dx, dy, dz);
              wsum += w;
              mx += w * at(est, xx, yy, zz);
              my += w * at(lab, xx, yy, zz);
            }
        mx /= wsum;
        my /= wsum;
        for (int dz = -half; dz <= half; ++dz)
          for (int dy = -half; dy <= half; ++dy)
            for (int dx = -half; dx <= half; ++dx) {
              const int xx = x + dx, yy = y + dy, zz = z + dz;
              if (xx < 0 || xx >= n || yy < 0 || yy >= n || zz < 0 || zz >= n)
                continue;
              const double w = weight(dx, dy, dz) / wsum;
              vx += w * (at(est, xx, yy, zz) - mx) * (at(est, xx, yy, zz) - mx);
              vy += w * (at(lab, xx, yy, zz) - my) * (at(lab, xx, yy, zz) - my);
              cxy += w * (at(est, xx, yy, zz) - mx) * (at(lab, xx, yy, zz) - my);
            }
        total += (2 * mx * my + c1) * (2 * cxy + c2) /
                 ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
  CHECK(ssim(est, lab, n, n, n) ==
        doctest::Approx(total / double(n * n * n)).epsilon(1e-10));
}

TEST_CASE("cnr hand case") {
  const std::vector<double> label = {1, 1, 0, 0};
  const std::vector<double> est = {2, 1, 0, 1};
  CHECK(cnr(est, label) == doctest::Approx(1.0 / std::sqrt(0.5)).epsilon(1e-10));
}

TEST_CASE("cnr constant estimate gives zero contrast") {
  const std::vector<double> label = {1, 1, 0, 0};
  const std::vector<double> est = {3, 3, 3, 3};
  CHECK(cnr(est, label) == 0.0);
}

TEST_CASE("cnr matches transcription oracle on random volumes") {
  std::mt19937_64 rng(4);
  std::bernoulli_distribution roi(0.3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 50 + rng() % 200;
    auto est = random_volume(rng, n);
    std::vector<double> label(n, 0.0);
    std::size_t nnz = 0;
    for (double& x : label)
      if (roi(rng)) {
        x = 1.0;
        ++nnz;
      }
    if (nnz < 2 || n - nnz < 2) continue;
    CHECK(cnr(est, label) ==
          doctest::Approx(cnr_oracle(est, label)).epsilon(1e-12));
  }
}

TEST_CASE("cnr is exactly scale invariant") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 100;
    auto est = random_volume(rng, n);
    std::vector<double> label(n, 0.0);
    for (std::size_t i = 0; i < n / 3; ++i) label[i] = 1.0;
    const double base = cnr(est, label);
    auto scaled = est;
    for (double& x : scaled) x *= 7.5;
    CHECK(cnr(scaled, label) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("box stats order statistics") {
  BoxStats one = box_stats({3.25});
  CHECK(one.median == 3.25);
  CHECK(one.q25 == 3.25);
  CHECK(one.q75 == 3.25);
  CHECK(one.outliers.empty());

  BoxStats s = box_stats({5, 3, 1, 4, 2});
  CHECK(s.median == 3.0);
  CHECK(s.q25 == 2.0);
  CHECK(s.q75 == 4.0);
  CHECK(s.whisker_lo == 1.0);
  CHECK(s.whisker_hi == 5.0);
  CHECK(s.outliers.empty());

  BoxStats flat = box_stats(std::vector<double>(10, 7.0));
  CHECK(flat.outliers.empty());
  CHECK(flat.median == 7.0);
}

TEST_CASE("box stats flags extreme outliers") {
  std::vector<double> v = {1, 2, 3, 4, 5, 100};
  const BoxStats s = box_stats(v);
  REQUIRE(s.outliers.size() == 1);
  CHECK(s.outliers[0] == 100.0);
  CHECK(s.whisker_hi == 5.0);
}
