#pragma once

#include <cstddef>

// Dense double-precision inner loops behind the codec, the transformer and
// the codebook search. Scalar reference implementations always exist; an
// AVX2+FMA variant is selected at load time when the CPU supports it (or
// forced off with SIGNTOK_KERNELS=scalar in the environment). The dispatched
// pointers and the scalar reference agree to within reassociation rounding;
// tests/test_kernels.cpp pins that equivalence.
namespace signtok::kernels {

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
// squared Euclidean distance
double l2sq(const double* a, const double* b, std::size_t n);
}  // namespace scalar

#if defined(SIGNTOK_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double l2sq(const double* a, const double* b, std::size_t n);
}  // namespace avx2
#endif

using DotFn = double (*)(const double*, const double*, std::size_t);
using AxpyFn = void (*)(double, const double*, double*, std::size_t);
using L2sqFn = double (*)(const double*, const double*, std::size_t);

extern const DotFn dot;
extern const AxpyFn axpy;
extern const L2sqFn l2sq;

// "avx2" or "scalar"
const char* active_backend();

}  // namespace signtok::kernels
