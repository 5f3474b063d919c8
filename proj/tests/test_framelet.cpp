#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "doctest.h"
#include "dot/framelet.hpp"

using namespace dot;

namespace {

Eigen::VectorXd random_signal(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

// Reversed filter zero-extended to length n: rev[(-j) mod n] = psi[j].
Eigen::VectorXd reversed_extended(const Eigen::VectorXd& psi, int n) {
  Eigen::VectorXd rev = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < int(psi.size()); ++j) rev[((n - j) % n)] = psi[j];
  return rev;
}

}  // namespace

TEST_CASE("hankel_lift index arithmetic") {
  Eigen::VectorXd f(3);
  f << 1, 2, 3;
  const Eigen::MatrixXd h = hankel_lift(f, 2);
  REQUIRE(h.rows() == 3);
  REQUIRE(h.cols() == 2);
  CHECK(h(0, 0) == 1);
  CHECK(h(0, 1) == 2);
  CHECK(h(1, 0) == 2);
  CHECK(h(1, 1) == 3);
  CHECK(h(2, 0) == 3);
  CHECK(h(2, 1) == 1);
}

TEST_CASE("hankel_lift d=1 is the signal itself") {
  std::mt19937_64 rng(1);
  const Eigen::VectorXd f = random_signal(rng, 9);
  const Eigen::MatrixXd h = hankel_lift(f, 1);
  CHECK((h.col(0) - f).norm() == 0.0);
}

TEST_CASE("hankel_lift rejects out-of-range windows") {
  Eigen::VectorXd f(4);
  f << 1, 2, 3, 4;
  CHECK_THROWS_AS(hankel_lift(f, 0), std::invalid_argument);
  CHECK_THROWS_AS(hankel_lift(f, 5), std::invalid_argument);
}

TEST_CASE("Hankel product equals convolution with the reversed filter") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 8 + int(rng() % 56);
    const int d = 1 + int(rng() % n);
    const Eigen::VectorXd f = random_signal(rng, n);
    const Eigen::VectorXd psi = random_signal(rng, d);
    const Eigen::VectorXd via_hankel = hankel_lift(f, d) * psi;
    const Eigen::VectorXd via_conv =
        circular_conv(f, reversed_extended(psi, n));
    CHECK((via_hankel - via_conv).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("lifted identity with SVD row-space frames") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 24, d = 6;
    const Eigen::VectorXd f = random_signal(rng, n);
    const Eigen::MatrixXd h = hankel_lift(f, d);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(h, Eigen::ComputeThinV);
    const Eigen::MatrixXd psi = svd.matrixV();  // psi psi^T = P_row
    const Eigen::MatrixXd recon =
        Eigen::MatrixXd::Identity(n, n) * (h * psi) * psi.transpose();
    CHECK((recon - h).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("round trip with identity frames") {
  std::mt19937_64 rng(4);
  const int n = 64, d = 4;
  const Eigen::VectorXd f = random_signal(rng, n);
  const Eigen::MatrixXd eye_n = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd eye_d = Eigen::MatrixXd::Identity(d, d);
  const Eigen::VectorXd back = framelet_roundtrip(f, d, eye_n, eye_n, eye_d,
                                                  eye_d);
  CHECK((back - f).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("round trip with orthogonal pooling frames") {
  std::mt19937_64 rng(5);
  const int n = 32, d = 8;
  const Eigen::VectorXd f = random_signal(rng, n);
  // Random orthogonal phi via QR, phi_tilde = phi so phi_tilde phi^T = I.
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) m.row(i) = random_signal(rng, n).transpose();
  const Eigen::MatrixXd phi =
      Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
  const Eigen::MatrixXd eye_d = Eigen::MatrixXd::Identity(d, d);
  const Eigen::VectorXd back =
      framelet_roundtrip(f, d, phi, phi, eye_d, eye_d);
  CHECK((back - f).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("round trip exact on the rank-deficient row space") {
  // A constant signal lifts to a rank-1 Hankel matrix; a single frame
  // vector spanning 1_d suffices.
  const int n = 16, d = 4;
  const Eigen::VectorXd f = Eigen::VectorXd::Constant(n, 2.75);
  Eigen::MatrixXd psi(d, 1);
  psi.setConstant(1.0 / std::sqrt(double(d)));
  const Eigen::MatrixXd eye_n = Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd back = framelet_roundtrip(f, d, eye_n, eye_n, psi, psi);
  CHECK((back - f).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("round trip with SVD frames on a generic signal") {
  std::mt19937_64 rng(6);
  const int n = 40, d = 5;
  const Eigen::VectorXd f = random_signal(rng, n);
  const Eigen::MatrixXd h = hankel_lift(f, d);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(h, Eigen::ComputeThinV);
  const Eigen::MatrixXd psi = svd.matrixV();
  const Eigen::MatrixXd eye_n = Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd back = framelet_roundtrip(f, d, eye_n, eye_n, psi, psi);
  CHECK((back - f).lpNorm<Eigen::Infinity>() < 1e-10);
}
