#include "dot/simd/kernels.hpp"

namespace dot::simd {
namespace {

bool g_force_scalar = false;

const KernelTable* detect() {
#ifdef DOT_HAVE_AVX2
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return &kAvx2;
#endif
  return &kScalar;
}

}  // namespace

const KernelTable& active() {
  static const KernelTable* best = detect();
  return g_force_scalar ? kScalar : *best;
}

void force_scalar(bool on) { g_force_scalar = on; }

const char* active_name() {
  return &active() == &kScalar ? "scalar" : "avx2";
}

}  // namespace dot::simd
