#include "dot/simd/kernels.hpp"

namespace dot::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double sum_squares_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

void gemv_scalar(const double* a, const double* x, double* y, std::size_t m,
                 std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) y[r] += dot_scalar(a + r * n, x, n);
}

void gemv_t_scalar(const double* a, const double* x, double* y, std::size_t m,
                   std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) axpy_scalar(x[r], a + r * n, y, n);
}

}  // namespace

const KernelTable kScalar = {dot_scalar,         axpy_scalar, scale_scalar,
                             sum_squares_scalar, gemv_scalar, gemv_t_scalar};

}  // namespace dot::simd
