#include "dot/framelet.hpp"

#include <stdexcept>

namespace dot {

Eigen::MatrixXd hankel_lift(const Eigen::VectorXd& f, int d) {
  const int n = int(f.size());
  if (d < 1 || d > n)
    throw std::invalid_argument("hankel_lift: window out of range");
  Eigen::MatrixXd h(n, d);
  for (int row = 0; row < n; ++row)
    for (int j = 0; j < d; ++j) h(row, j) = f[(row + j) % n];
  return h;
}

Eigen::VectorXd circular_conv(const Eigen::VectorXd& a,
                              const Eigen::VectorXd& b) {
  const int n = int(a.size());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (int m = 0; m < n; ++m)
    for (int j = 0; j < int(b.size()); ++j)
      y[m] += a[((m - j) % n + n) % n] * b[j];
  return y;
}

Eigen::VectorXd circular_corr(const Eigen::VectorXd& a,
                              const Eigen::VectorXd& b) {
  const int n = int(a.size());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (int m = 0; m < n; ++m)
    for (int j = 0; j < int(b.size()); ++j) y[m] += a[(m + j) % n] * b[j];
  return y;
}

Eigen::MatrixXd framelet_encode(const Eigen::VectorXd& f,
                                const Eigen::MatrixXd& phi,
                                const Eigen::MatrixXd& psi) {
  const int n = int(f.size());
  if (phi.rows() != n)
    throw std::invalid_argument("framelet_encode: phi shape mismatch");
  Eigen::MatrixXd filtered(n, psi.cols());
  for (int i = 0; i < psi.cols(); ++i)
    filtered.col(i) = circular_corr(f, psi.col(i));
  return phi.transpose() * filtered;
}

Eigen::VectorXd framelet_decode(const Eigen::MatrixXd& coeff,
                                const Eigen::MatrixXd& phi_tilde,
                                const Eigen::MatrixXd& psi_tilde, int d) {
  if (psi_tilde.cols() != coeff.cols())
    throw std::invalid_argument("framelet_decode: channel mismatch");
  const int n = int(phi_tilde.rows());
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < coeff.cols(); ++i)
    f += circular_conv(phi_tilde * coeff.col(i), psi_tilde.col(i));
  return f / double(d);
}

Eigen::VectorXd framelet_roundtrip(const Eigen::VectorXd& f, int d,
                                   const Eigen::MatrixXd& phi,
                                   const Eigen::MatrixXd& phi_tilde,
                                   const Eigen::MatrixXd& psi,
                                   const Eigen::MatrixXd& psi_tilde) {
  return framelet_decode(framelet_encode(f, phi, psi), phi_tilde, psi_tilde, d);
}

}  // namespace dot
