#include "mmrd/loss/loss.hpp"

#include <cmath>

#include "mmrd/errors.hpp"

namespace mmrd {

LossParams LossParams::from_nu(double nu) {
  require(nu >= 0.0 && nu <= 1.0, "nu must lie in [0, 1]");
  return LossParams{nu, std::nullopt};
}

double nu_from_raw(double kappa, double sigma_m2, double eta0_sq) {
  require(kappa > 0.0, "kappa must be positive");
  require(sigma_m2 > 0.0, "sigma_M^2 must be positive");
  require(eta0_sq >= 1.0, "eta0^2 must be at least one");
  const double k2 = kappa * kappa;
  return k2 / (eta0_sq * sigma_m2 + k2);
}

LossParams LossParams::from_raw(double kappa, double sigma_m2, double eta0_sq) {
  return LossParams{nu_from_raw(kappa, sigma_m2, eta0_sq), Raw{kappa, sigma_m2, eta0_sq}};
}

LossReport evaluate(const MomentSet& ms, const LossParams& params) {
  require(params.nu >= 0.0 && params.nu <= 1.0, "nu must lie in [0, 1]");
  LossReport r;
  r.trace_term = trace(ms.R_inv);
  r.bias_term = sym_eigen(ms.U).max();
  r.i_nu = (1.0 - params.nu) * r.trace_term + params.nu * r.bias_term;
  if (params.raw) r.j_value = params.raw->sigma_m2 * r.trace_term + params.raw->kappa * params.raw->kappa * r.bias_term;
  r.support_size = ms.support_size;
  return r;
}

double i_nu_from(const Matrix& R, const Matrix& S, double nu) {
  Matrix R_inv;
  try {
    R_inv = spd_inverse(R);
  } catch (const Error& e) {
    fail(ErrorKind::SingularInformation, e.what());
  }
  double value = 0.0;
  if (nu < 1.0) value += (1.0 - nu) * trace(R_inv);
  if (nu > 0.0) value += nu * sym_eigen(R_inv * S * R_inv).max();
  return value;
}

Disturbance WorstCaseTau::disturbance(const ModelBasis& basis) const { return Disturbance(basis, tau, kappa, n); }

namespace {

// (I - QQᵀ)·v
Vector project_out(const Matrix& Q, Vector v) {
  for (std::size_t k = 0; k < Q.cols(); ++k) {
    double c = 0.0;
    for (std::size_t i = 0; i < Q.rows(); ++i) c += Q(i, k) * v[i];
    for (std::size_t i = 0; i < Q.rows(); ++i) v[i] -= c * Q(i, k);
  }
  return v;
}

}  // namespace

WorstCaseTau worst_case_tau(const ModelBasis& basis, const MomentSet& ms, double kappa, long n) {
  require(kappa > 0.0, "kappa must be positive");
  require(n >= 1, "n must be positive");
  const std::size_t N = basis.points();
  const std::size_t p = basis.params();

  WorstCaseTau w;
  w.kappa = kappa;
  w.n = n;
  w.tau.assign(N, 0.0);
  w.direction.assign(N, 0.0);
  if (N == p) {
    w.degenerate_complement = true;
    w.attained_bias = 1.0;
    return w;
  }

  // The non-zero spectrum of the (N-p)-dimensional bias operator coincides
  // with that of U - I (p x p). Its top eigenvector w maps to the complement
  // through the projector: τ₀ ∝ (I - QQᵀ)·D·Q·R⁻¹·w.
  const EigenResult eig = sym_eigen(ms.U);
  w.attained_bias = eig.max();
  const double tie = 1e-9 * std::max(1.0, std::abs(eig.max()));
  w.multiplicity = 0;
  for (double v : eig.values)
    if (eig.max() - v <= tie) ++w.multiplicity;

  const Vector top = eig.vectors.col(0);
  const Vector rw = ms.R_inv * std::span<const double>(top);
  Vector v = basis.Q * std::span<const double>(rw);
  for (std::size_t i = 0; i < N; ++i) v[i] *= ms.weights[i];
  v = project_out(basis.Q, std::move(v));
  double len = norm2(v);

  if (len <= 1e-10 * (1.0 + norm2(rw))) {
    // Bias operator vanishes (ch_max U = 1): every feasible τ is worst-case.
    // Take the complement direction of the most poorly represented grid point.
    double best = -1.0;
    for (std::size_t j = 0; j < N; ++j) {
      Vector e(N, 0.0);
      e[j] = 1.0;
      e = project_out(basis.Q, std::move(e));
      const double l = norm2(e);
      if (l > best + 1e-12) {
        best = l;
        v = std::move(e);
      }
    }
    len = norm2(v);
  }
  // Canonical sign: largest-magnitude entry positive.
  std::size_t arg = 0;
  for (std::size_t i = 1; i < N; ++i)
    if (std::abs(v[i]) > std::abs(v[arg]) + 1e-14) arg = i;
  const double sign = v[arg] < 0.0 ? -1.0 : 1.0;
  const double scale = kappa / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < N; ++i) {
    w.direction[i] = sign * v[i] / len;
    w.tau[i] = scale * w.direction[i];
  }
  return w;
}

double bias_quadratic_form(const ModelBasis& basis, const MomentSet& ms, std::span<const double> tau0) {
  require(tau0.size() == basis.points(), "direction length does not match the design space");
  const Vector c = weighted_xty(basis.Q, ms.weights, tau0);  // QᵀDτ₀
  const Vector r = ms.R_inv * std::span<const double>(c);
  return dot(r, r);
}

double imse_exact(const ModelBasis& basis, const MomentSet& ms, const Disturbance& tau, double sigma_m2) {
  require(sigma_m2 >= 0.0, "sigma_M^2 must be non-negative");
  const Matrix M0_inv = spd_inverse(ms.M0);
  const Vector b0 = weighted_xty(basis.F, ms.weights, tau.tau());
  const Vector m = M0_inv * std::span<const double>(b0);
  const Vector am = basis.A * std::span<const double>(m);
  const double bias = dot(m, am);
  const double variance = sigma_m2 / static_cast<double>(tau.n()) * trace(basis.A * M0_inv);
  return tau.sum_of_squares() + bias + variance;
}

}  // namespace mmrd
