#include <doctest.h>

#include <cmath>
#include <vector>

#include "signtok/kernels.hpp"
#include "signtok/rng.hpp"

using namespace signtok;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) {
    x = rng.normal();
  }
  return v;
}

bool close_rel(double a, double b, double tol) {
  const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) <= tol * scale;
}

}  // namespace

TEST_CASE("dispatched kernels match the scalar reference") {
  Rng rng(7);
  for (std::size_t n : {std::size_t{1}, std::size_t{3}, std::size_t{4}, std::size_t{17},
                        std::size_t{64}, std::size_t{128}, std::size_t{513}}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto a = random_vec(rng, n);
      const auto b = random_vec(rng, n);

      CHECK(close_rel(kernels::dot(a.data(), b.data(), n),
                      kernels::scalar::dot(a.data(), b.data(), n), 1e-12));
      CHECK(close_rel(kernels::l2sq(a.data(), b.data(), n),
                      kernels::scalar::l2sq(a.data(), b.data(), n), 1e-12));

      auto y1 = random_vec(rng, n);
      auto y2 = y1;
      const double alpha = rng.normal();
      kernels::axpy(alpha, a.data(), y1.data(), n);
      kernels::scalar::axpy(alpha, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(close_rel(y1[i], y2[i], 1e-12));
      }
    }
  }
}

#if defined(SIGNTOK_HAVE_AVX2)
TEST_CASE("avx2 variants match scalar when the CPU supports them") {
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) {
    return;
  }
  Rng rng(11);
  for (std::size_t n = 1; n <= 70; ++n) {
    const auto a = random_vec(rng, n);
    const auto b = random_vec(rng, n);
    CHECK(close_rel(kernels::avx2::dot(a.data(), b.data(), n),
                    kernels::scalar::dot(a.data(), b.data(), n), 1e-12));
    CHECK(close_rel(kernels::avx2::l2sq(a.data(), b.data(), n),
                    kernels::scalar::l2sq(a.data(), b.data(), n), 1e-12));
    auto y1 = random_vec(rng, n);
    auto y2 = y1;
    kernels::avx2::axpy(0.37, a.data(), y1.data(), n);
    kernels::scalar::axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(close_rel(y1[i], y2[i], 1e-12));
    }
  }
}
#endif

TEST_CASE("kernel edge cases") {
  CHECK(kernels::dot(nullptr, nullptr, 0) == 0.0);
  CHECK(kernels::l2sq(nullptr, nullptr, 0) == 0.0);
  const double a[2] = {1.0, 2.0};
  const double b[2] = {3.0, -1.0};
  CHECK(kernels::dot(a, b, 2) == doctest::Approx(1.0));
  CHECK(kernels::l2sq(a, b, 2) == doctest::Approx(13.0));
  CHECK(kernels::active_backend() != nullptr);
}
