#pragma once

// Inner-loop kernels shared by the moment, fitting and simulation code.
//
// Every kernel has a portable scalar reference implementation. On x86-64 an
// AVX2+FMA variant is compiled into a separate translation unit and chosen at
// runtime when the CPU supports it. Setting MMRD_KERNELS=scalar (or avx2) in
// the environment pins the choice; tests compare the two tables directly.

#include <cstddef>

namespace mmrd::kernels {

struct KernelTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out(cols x cols) = X^T diag(w) X for row-major X(rows x cols); w may be null.
  void (*weighted_gram)(const double* x, std::size_t rows, std::size_t cols, const double* w,
                        double* out);
  // out(cols) = X^T diag(w) y; w may be null.
  void (*weighted_xty)(const double* x, std::size_t rows, std::size_t cols, const double* w,
                       const double* y, double* out);
};

const KernelTable& scalar();

/// AVX2 table, or nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2();

/// The table used by the library.
const KernelTable& active();

}  // namespace mmrd::kernels
