#include "mmrd/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmrd/errors.hpp"

namespace mmrd {

QrFactors orthonormal_basis(const Matrix& F) {
  const std::size_t n = F.rows();
  const std::size_t p = F.cols();
  require(p >= 1, "orthonormal_basis needs at least one column");
  if (n < p) fail(ErrorKind::RankDeficient, "fewer rows than columns");

  const double scale = frobenius_norm(F);
  Matrix Qt(p, n);  // rows are the basis vectors, kept contiguous
  Matrix T(p, p);
  for (std::size_t j = 0; j < p; ++j) {
    Vector v = F.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        const double r = dot(Qt.row(k), v);
        T(k, j) += r;
        for (std::size_t i = 0; i < n; ++i) v[i] -= r * Qt(k, i);
      }
    }
    const double len = norm2(v);
    if (!(len > 1e-12 * scale))
      fail(ErrorKind::RankDeficient, "column " + std::to_string(j) + " is (numerically) dependent on earlier columns");
    T(j, j) = len;
    for (std::size_t i = 0; i < n; ++i) Qt(j, i) = v[i] / len;
  }
  return {Qt.transpose(), std::move(T)};
}

EigenResult sym_eigen(const Matrix& M) {
  require(M.is_square(), "sym_eigen needs a square matrix");
  const std::size_t n = M.rows();
  Matrix a = symmetrize(M);
  Matrix v = Matrix::identity(n);
  const double scale = frobenius_norm(a);

  constexpr int kMaxSweeps = 100;
  bool converged = (n <= 1 || scale == 0.0);
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) fail(ErrorKind::NoConvergence, "Jacobi sweep budget exhausted");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  EigenResult out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

Matrix cholesky(const Matrix& M) {
  require(M.is_square(), "cholesky needs a square matrix");
  const std::size_t n = M.rows();
  double diag_scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) diag_scale = std::max(diag_scale, std::abs(M(i, i)));
  const double floor = 1e-12 * std::max(1.0, diag_scale);

  Matrix L(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = M(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (!(d > floor)) fail(ErrorKind::NotPositiveDefinite, "Cholesky pivot " + std::to_string(j) + " is not positive");
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.5 * (M(i, j) + M(j, i));
      for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / ljj;
    }
  }
  return L;
}

namespace {

void cholesky_solve_in_place(const Matrix& L, Matrix& X) {
  const std::size_t n = L.rows();
  for (std::size_t c = 0; c < X.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = X(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= L(i, k) * X(k, c);
      X(i, c) = s / L(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = X(i, c);
      for (std::size_t k = i + 1; k < n; ++k) s -= L(k, i) * X(k, c);
      X(i, c) = s / L(i, i);
    }
  }
}

}  // namespace

Matrix solve_spd(const Matrix& M, const Matrix& B) {
  require(M.rows() == B.rows(), "shape mismatch in solve_spd");
  const Matrix L = cholesky(M);
  Matrix X = B;
  cholesky_solve_in_place(L, X);
  return X;
}

Vector solve_spd(const Matrix& M, std::span<const double> b) {
  const Matrix X = solve_spd(M, Matrix::column(b));
  return X.col(0);
}

Matrix spd_inverse(const Matrix& M) {
  Matrix inv = solve_spd(M, Matrix::identity(M.rows()));
  return symmetrize(inv);
}

namespace {

Matrix spectral_map(const Matrix& M, double (*f)(double)) {
  const EigenResult e = sym_eigen(M);
  const std::size_t n = M.rows();
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double fk = f(e.values[k]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out(i, j) += fk * e.vectors(i, k) * e.vectors(j, k);
  }
  return out;
}

}  // namespace

Matrix sym_sqrt(const Matrix& M) {
  return spectral_map(M, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

Matrix sym_inv_sqrt(const Matrix& M) {
  const EigenResult e = sym_eigen(M);
  if (!(e.min() > 0.0)) fail(ErrorKind::NotPositiveDefinite, "inverse square root of a singular matrix");
  return spectral_map(M, [](double x) { return 1.0 / std::sqrt(x); });
}

}  // namespace mmrd
