#pragma once

#include <cstddef>

// Data-parallel inner-loop kernels used by the network and the iterative
// solvers. Each kernel has a scalar reference implementation and, when the
// build and CPU support it, an AVX2+FMA variant selected once at startup.
// dot::simd::force_scalar() pins the scalar path (used by equivalence tests).

namespace dot::simd {

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*scale)(double alpha, double* x, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
  // y += A x, A row-major m x n
  void (*gemv)(const double* a, const double* x, double* y, std::size_t m,
               std::size_t n);
  // y += A^T x, A row-major m x n (y has length n)
  void (*gemv_t)(const double* a, const double* x, double* y, std::size_t m,
                 std::size_t n);
};

extern const KernelTable kScalar;
#ifdef DOT_HAVE_AVX2
extern const KernelTable kAvx2;
#endif

// Active table; resolved on first use.
const KernelTable& active();
void force_scalar(bool on);
const char* active_name();

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void scale(double alpha, double* x, std::size_t n) {
  active().scale(alpha, x, n);
}
inline double sum_squares(const double* x, std::size_t n) {
  return active().sum_squares(x, n);
}
inline void gemv(const double* a, const double* x, double* y, std::size_t m,
                 std::size_t n) {
  active().gemv(a, x, y, m, n);
}
inline void gemv_t(const double* a, const double* x, double* y, std::size_t m,
                   std::size_t n) {
  active().gemv_t(a, x, y, m, n);
}

}  // namespace dot::simd
