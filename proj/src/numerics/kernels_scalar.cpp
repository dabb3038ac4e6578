#include "mmrd/numerics/kernels.hpp"

#include <algorithm>

namespace mmrd::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void weighted_gram_scalar(const double* x, std::size_t rows, std::size_t cols, const double* w,
                          double* out) {
  std::fill(out, out + cols * cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xi = x + i * cols;
    const double wi = w ? w[i] : 1.0;
    if (wi == 0.0) continue;
    for (std::size_t j = 0; j < cols; ++j) {
      const double a = wi * xi[j];
      for (std::size_t k = j; k < cols; ++k) out[j * cols + k] += a * xi[k];
    }
  }
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t k = 0; k < j; ++k) out[j * cols + k] = out[k * cols + j];
}

void weighted_xty_scalar(const double* x, std::size_t rows, std::size_t cols, const double* w,
                         const double* y, double* out) {
  std::fill(out, out + cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double a = (w ? w[i] : 1.0) * y[i];
    const double* xi = x + i * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += a * xi[j];
  }
}

}  // namespace

const KernelTable& scalar() {
  static const KernelTable table{"scalar", dot_scalar, axpy_scalar, weighted_gram_scalar,
                                 weighted_xty_scalar};
  return table;
}

}  // namespace mmrd::kernels
