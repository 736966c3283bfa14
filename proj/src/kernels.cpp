#include "signtok/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace signtok::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += a[i] * b[i];
  }
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += alpha * x[i];
  }
}

double l2sq(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace scalar

namespace {

bool use_avx2() {
#if defined(SIGNTOK_HAVE_AVX2)
  const char* force = std::getenv("SIGNTOK_KERNELS");
  if (force != nullptr && std::strcmp(force, "scalar") == 0) {
    return false;
  }
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const bool kUseAvx2 = use_avx2();

}  // namespace

#if defined(SIGNTOK_HAVE_AVX2)
const DotFn dot = kUseAvx2 ? avx2::dot : scalar::dot;
const AxpyFn axpy = kUseAvx2 ? avx2::axpy : scalar::axpy;
const L2sqFn l2sq = kUseAvx2 ? avx2::l2sq : scalar::l2sq;
#else
const DotFn dot = scalar::dot;
const AxpyFn axpy = scalar::axpy;
const L2sqFn l2sq = scalar::l2sq;
#endif

const char* active_backend() { return kUseAvx2 ? "avx2" : "scalar"; }

}  // namespace signtok::kernels
