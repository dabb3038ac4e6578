#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "mmrd/numerics/kernels.hpp"

using namespace mmrd::kernels;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

bool close(double a, double b, double scale) { return std::abs(a - b) <= 1e-13 * (1.0 + scale); }

}  // namespace

TEST_CASE("active table is one of the known tables") {
  const KernelTable& t = active();
  const bool known = &t == &scalar() || (avx2() != nullptr && &t == avx2());
  CHECK(known);
  MESSAGE("active kernels: " << t.name);
}

TEST_CASE("scalar kernels match direct loops") {
  std::mt19937_64 rng(1);
  const auto a = random_vector(rng, 17), b = random_vector(rng, 17);
  double s = 0.0;
  for (std::size_t i = 0; i < 17; ++i) s += a[i] * b[i];
  CHECK(close(scalar().dot(a.data(), b.data(), 17), s, 17));
  auto y = b;
  scalar().axpy(0.5, a.data(), y.data(), 17);
  for (std::size_t i = 0; i < 17; ++i) CHECK(y[i] == b[i] + 0.5 * a[i]);
}

TEST_CASE("AVX2 kernels agree with the scalar reference") {
  const KernelTable* simd = avx2();
  if (simd == nullptr) {
    MESSAGE("AVX2 kernels unavailable on this machine; equivalence not exercised");
    return;
  }
  const KernelTable& ref = scalar();
  std::mt19937_64 rng(2);
  for (std::size_t n = 0; n <= 67; ++n) {
    const auto a = random_vector(rng, n), b = random_vector(rng, n);
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
    CHECK(close(simd->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), mag));

    auto y1 = b, y2 = b;
    simd->axpy(-1.25, a.data(), y1.data(), n);
    ref.axpy(-1.25, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i], std::abs(y2[i])));
  }
  for (std::size_t rows : {1u, 2u, 3u, 5u, 8u, 19u, 20u, 64u, 201u}) {
    for (std::size_t cols : {1u, 2u, 3u, 4u, 5u, 7u, 9u}) {
      const auto x = random_vector(rng, rows * cols);
      auto w = random_vector(rng, rows);
      for (double& v : w) v = std::abs(v);
      const auto y = random_vector(rng, rows);
      for (const double* wp : {static_cast<const double*>(nullptr), static_cast<const double*>(w.data())}) {
        std::vector<double> g1(cols * cols), g2(cols * cols);
        simd->weighted_gram(x.data(), rows, cols, wp, g1.data());
        ref.weighted_gram(x.data(), rows, cols, wp, g2.data());
        for (std::size_t k = 0; k < g1.size(); ++k) CHECK(close(g1[k], g2[k], 4.0 * static_cast<double>(rows)));
        std::vector<double> v1(cols), v2(cols);
        simd->weighted_xty(x.data(), rows, cols, wp, y.data(), v1.data());
        ref.weighted_xty(x.data(), rows, cols, wp, y.data(), v2.data());
        for (std::size_t k = 0; k < cols; ++k) CHECK(close(v1[k], v2[k], 4.0 * static_cast<double>(rows)));
      }
    }
  }
}
