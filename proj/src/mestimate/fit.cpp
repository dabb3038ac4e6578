#include "mmrd/mestimate/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "mmrd/errors.hpp"

namespace mmrd {

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "normal quantile needs p in (0, 1)");
  return std::numbers::sqrt2 * boost::math::erf_inv(2.0 * p - 1.0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double mad_constant() {
  static const double c = normal_quantile(0.75);
  return c;
}

Matrix replicate_rows(const Matrix& F, std::span<const long> counts) {
  require(counts.size() == F.rows(), "counts length does not match F");
  long n = 0;
  for (long c : counts) n += c;
  Matrix X(static_cast<std::size_t>(n), F.cols());
  std::size_t r = 0;
  for (std::size_t i = 0; i < F.rows(); ++i)
    for (long j = 0; j < counts[i]; ++j, ++r) std::copy(F.row(i).begin(), F.row(i).end(), X.row(r).begin());
  return X;
}

Matrix regressor_rows(const DesignSpace& space, const ModelSpec& model, const Matrix& xs) {
  require(xs.cols() == space.dimension(), "observation dimension does not match the design space");
  Matrix X(xs.rows(), model.size());
  for (std::size_t r = 0; r < xs.rows(); ++r) {
    if (model.is_external()) {
      const auto idx = space.find(xs.row(r));
      if (!idx) fail(ErrorKind::InvalidInput, "observation " + std::to_string(r + 1) + " is not a design point");
      const auto src = model.external_matrix()->row(*idx);
      std::copy(src.begin(), src.end(), X.row(r).begin());
    } else {
      const Vector f = model.evaluate(xs.row(r));
      std::copy(f.begin(), f.end(), X.row(r).begin());
    }
  }
  return X;
}

namespace {

double median_in_place(Vector& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (n % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

void compute_residuals(const Observations& d, std::span<const double> theta, Vector& r) {
  r.resize(d.y.size());
  const Vector fitted = d.X * theta;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = d.y[i] - fitted[i];
}

Vector weighted_ls(const Observations& d, std::span<const double> w) {
  try {
    return solve_spd(weighted_gram(d.X, w), weighted_xty(d.X, w, d.y));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NotPositiveDefinite) fail(ErrorKind::RankDeficient, "regressors do not have full rank");
    throw;
  }
}

double mad_scale(const Vector& r, Vector& scratch) {
  scratch.resize(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) scratch[i] = std::abs(r[i]);
  return median_in_place(scratch) / mad_constant();
}

}  // namespace

double estimating_equation_norm(const Observations& data, const PsiSpec& psi, std::span<const double> theta,
                                double sigma) {
  Vector r;
  compute_residuals(data, theta, r);
  for (double& v : r) v = sigma > 0.0 ? psi.psi(v / sigma) : v;
  return norm2(weighted_xty(data.X, {}, r));
}

FitResult fit(const Observations& data, const PsiSpec& psi, const FitOptions& opts) {
  FitWorkspace ws;
  return fit(data, psi, opts, ws);
}

FitResult fit(const Observations& data, const PsiSpec& psi, const FitOptions& opts, FitWorkspace& ws) {
  const std::size_t n = data.y.size();
  const std::size_t p = data.X.cols();
  require(data.X.rows() == n, "regressor rows do not match the responses");
  require(n >= 1 && n >= p, "need at least as many observations as parameters");
  require(opts.max_iters >= 1 && opts.tol > 0.0, "invalid fit options");

  const auto [ymin, ymax] = std::minmax_element(data.y.begin(), data.y.end());
  const double spread = *ymax - *ymin;

  FitResult out;
  out.theta_hat = weighted_ls(data, {});
  compute_residuals(data, out.theta_hat, ws.residuals);
  double sigma = mad_scale(ws.residuals, ws.abs_residuals);

  auto finish = [&](FitResult& r, double s) {
    r.sigma_hat = s;
    r.residuals = ws.residuals;
    r.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.weights[i] = s > 0.0 ? psi.weight(ws.residuals[i] / s) : 1.0;
    r.estimating_equation_norm = estimating_equation_norm(data, psi, r.theta_hat, s);
  };

  if (!(sigma >= 1e-12 * spread) || sigma == 0.0) {
    // Exact (or near exact) fit: the MAD is zero and ψ(r/σ̂) is undefined.
    out.scale_collapse = true;
    out.converged = true;
    finish(out, 0.0);
    out.sigma_hat = 0.0;
    return out;
  }
  if (psi.family == PsiFamily::Identity) {
    out.converged = true;
    finish(out, sigma);
    return out;
  }

  Vector theta = out.theta_hat;
  for (int it = 1; it <= opts.max_iters; ++it) {
    out.iterations = it;
    compute_residuals(data, theta, ws.residuals);
    sigma = mad_scale(ws.residuals, ws.abs_residuals);
    if (!(sigma >= 1e-12 * spread) || sigma == 0.0) {
      out.theta_hat = weighted_ls(data, {});
      compute_residuals(data, out.theta_hat, ws.residuals);
      out.scale_collapse = true;
      out.converged = true;
      finish(out, 0.0);
      return out;
    }
    ws.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) ws.weights[i] = psi.weight(ws.residuals[i] / sigma);
    Vector next = weighted_ls(data, ws.weights);

    const double base = estimating_equation_norm(data, psi, theta, sigma);
    double trial = estimating_equation_norm(data, psi, next, sigma);
    for (int h = 0; h < 30 && trial > base; ++h) {
      for (std::size_t j = 0; j < p; ++j) next[j] = 0.5 * (next[j] + theta[j]);
      trial = estimating_equation_norm(data, psi, next, sigma);
    }

    double step = 0.0;
    for (std::size_t j = 0; j < p; ++j) step += (next[j] - theta[j]) * (next[j] - theta[j]);
    theta = std::move(next);
    if (std::sqrt(step) <= opts.tol * (1.0 + norm2(theta))) {
      out.converged = true;
      break;
    }
  }

  out.theta_hat = theta;
  compute_residuals(data, theta, ws.residuals);
  finish(out, sigma);
  return out;
}

}  // namespace mmrd
