#include <immintrin.h>

#include <vector>

#include "mmrd/numerics/kernels.hpp"

namespace mmrd::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

// sum_i w[i] a[i] b[i]
double dot3_avx2(const double* w, const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d wa0 = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    const __m256d wa1 = _mm256_mul_pd(_mm256_loadu_pd(w + i + 4), _mm256_loadu_pd(a + i + 4));
    acc0 = _mm256_fmadd_pd(wa0, _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(wa1, _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d wa = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    acc0 = _mm256_fmadd_pd(wa, _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Column-major copy of a row-major block so every (j, k) pair becomes a
// contiguous weighted dot product.
struct ColumnPack {
  std::vector<double> cols;
  std::vector<double> ones;

  void load(const double* x, std::size_t rows, std::size_t ncols) {
    cols.resize(rows * ncols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < ncols; ++j) cols[j * rows + i] = x[i * ncols + j];
  }
  const double* unit_weights(std::size_t rows) {
    if (ones.size() < rows) ones.assign(rows, 1.0);
    return ones.data();
  }
};

ColumnPack& scratch() {
  thread_local ColumnPack pack;
  return pack;
}

void weighted_gram_avx2(const double* x, std::size_t rows, std::size_t cols, const double* w,
                        double* out) {
  ColumnPack& pack = scratch();
  pack.load(x, rows, cols);
  const double* weights = w ? w : pack.unit_weights(rows);
  for (std::size_t j = 0; j < cols; ++j) {
    const double* cj = pack.cols.data() + j * rows;
    for (std::size_t k = j; k < cols; ++k) {
      const double v = dot3_avx2(weights, cj, pack.cols.data() + k * rows, rows);
      out[j * cols + k] = v;
      out[k * cols + j] = v;
    }
  }
}

void weighted_xty_avx2(const double* x, std::size_t rows, std::size_t cols, const double* w,
                       const double* y, double* out) {
  ColumnPack& pack = scratch();
  pack.load(x, rows, cols);
  const double* weights = w ? w : pack.unit_weights(rows);
  for (std::size_t j = 0; j < cols; ++j) out[j] = dot3_avx2(weights, pack.cols.data() + j * rows, y, rows);
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2", dot_avx2, axpy_avx2, weighted_gram_avx2, weighted_xty_avx2};
  return table;
}

}  // namespace mmrd::kernels
