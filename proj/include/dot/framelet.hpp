#pragma once

#include <Eigen/Dense>

namespace dot {

/// Wrap-around Hankel lifting: row n, column j reads f[(n + j) mod N].
Eigen::MatrixXd hankel_lift(const Eigen::VectorXd& f, int d);

/// Circular convolution (y[m] = sum_j a[(m - j) mod N] b[j], b zero-extended).
Eigen::VectorXd circular_conv(const Eigen::VectorXd& a,
                              const Eigen::VectorXd& b);

/// Circular correlation (y[n] = sum_j a[(n + j) mod N] b[j]); equals the
/// Hankel product hankel_lift(a, |b|) * b.
Eigen::VectorXd circular_corr(const Eigen::VectorXd& a,
                              const Eigen::VectorXd& b);

/// Encoder: C = Phi^T [f (*) psi_1 ... f (*) psi_r] with correlation filters
/// taken from the columns of Psi.
Eigen::MatrixXd framelet_encode(const Eigen::VectorXd& f,
                                const Eigen::MatrixXd& phi,
                                const Eigen::MatrixXd& psi);

/// Decoder: f' = (1/d) sum_i (PhiTilde c_i) (*) psiTilde_i (plain circular
/// convolution), the 1/d weight undoing the d-fold redundancy of the lifting.
Eigen::VectorXd framelet_decode(const Eigen::MatrixXd& coeff,
                                const Eigen::MatrixXd& phi_tilde,
                                const Eigen::MatrixXd& psi_tilde, int d);

/// Encode-then-decode round trip.
Eigen::VectorXd framelet_roundtrip(const Eigen::VectorXd& f, int d,
                                   const Eigen::MatrixXd& phi,
                                   const Eigen::MatrixXd& phi_tilde,
                                   const Eigen::MatrixXd& psi,
                                   const Eigen::MatrixXd& psi_tilde);

}  // namespace dot
