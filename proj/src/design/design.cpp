#include "mmrd/design/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmrd/errors.hpp"

namespace mmrd {

DesignSpace::DesignSpace(Matrix points) : points_(std::move(points)) {
  require(points_.rows() >= 1, "design space needs at least one point");
  require(points_.cols() >= 1, "design points need at least one coordinate");
  require(points_.all_finite(), "design points must be finite");
  for (std::size_t i = 0; i < points_.rows(); ++i)
    for (std::size_t j = i + 1; j < points_.rows(); ++j)
      require(!std::equal(points_.row(i).begin(), points_.row(i).end(), points_.row(j).begin()),
              "design points must be distinct (rows " + std::to_string(i) + " and " + std::to_string(j) + ")");
}

DesignSpace DesignSpace::grid(double lo, double hi, std::size_t n) {
  require(n >= 1, "grid needs at least one point");
  require(n == 1 || hi > lo, "grid needs hi > lo");
  Matrix pts(n, 1);
  for (std::size_t i = 0; i < n; ++i)
    pts(i, 0) = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  if (n > 1) pts(n - 1, 0) = hi;
  return DesignSpace(std::move(pts));
}

std::optional<std::size_t> DesignSpace::find(std::span<const double> x, double tol) const {
  if (x.size() != dimension()) return std::nullopt;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto p = point(i);
    bool same = true;
    for (std::size_t j = 0; j < x.size() && same; ++j) same = std::abs(p[j] - x[j]) <= tol * (1.0 + std::abs(p[j]));
    if (same) return i;
  }
  return std::nullopt;
}

ModelSpec ModelSpec::polynomial(int degree) {
  require(degree >= 0, "polynomial degree must be non-negative");
  std::vector<Monomial> terms;
  for (int d = 0; d <= degree; ++d) terms.push_back({d});
  return monomials(std::move(terms));
}

ModelSpec ModelSpec::monomials(std::vector<Monomial> terms) {
  require(!terms.empty(), "model needs at least one regressor");
  const std::size_t q = terms.front().size();
  for (const auto& t : terms) {
    require(t.size() == q && q >= 1, "all monomials need one exponent per coordinate");
    require(std::all_of(t.begin(), t.end(), [](int e) { return e >= 0; }), "exponents must be non-negative");
  }
  ModelSpec m;
  m.terms_ = std::move(terms);
  return m;
}

ModelSpec ModelSpec::external(Matrix F) {
  require(F.rows() >= 1 && F.cols() >= 1, "external regressor matrix is empty");
  require(F.all_finite(), "external regressor matrix must be finite");
  ModelSpec m;
  m.external_ = std::move(F);
  return m;
}

std::size_t ModelSpec::size() const { return external_ ? external_->cols() : terms_.size(); }

Vector ModelSpec::evaluate(std::span<const double> x) const {
  require(!external_, "an external basis cannot be evaluated at arbitrary points");
  Vector f(terms_.size());
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    require(terms_[k].size() == x.size(), "point dimension does not match the model");
    double v = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) v *= std::pow(x[j], terms_[k][j]);
    f[k] = v;
  }
  return f;
}

Matrix build_regressors(const DesignSpace& space, const ModelSpec& model) {
  Matrix F;
  if (model.is_external()) {
    F = *model.external_matrix();
    require(F.rows() == space.size(), "external regressor matrix has " + std::to_string(F.rows()) +
                                          " rows but the design space has " + std::to_string(space.size()) + " points");
  } else {
    F = Matrix(space.size(), model.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
      const Vector f = model.evaluate(space.point(i));
      std::copy(f.begin(), f.end(), F.row(i).begin());
    }
  }
  orthonormal_basis(F);  // rank check
  return F;
}

ModelBasis make_basis(Matrix F) {
  QrFactors qr = orthonormal_basis(F);
  Matrix A = weighted_gram(F);
  return {std::move(F), std::move(qr.Q), std::move(qr.T), std::move(A)};
}

ModelBasis make_basis(const DesignSpace& space, const ModelSpec& model) {
  return make_basis(build_regressors(space, model));
}

Design::Design(Vector weights) : weights_(std::move(weights)) {
  require(!weights_.empty(), "design needs at least one weight");
  double sum = 0.0;
  for (double w : weights_) {
    require(std::isfinite(w) && w >= 0.0, "design weights must be finite and non-negative");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-12, "design weights must sum to one");
}

Design Design::uniform(std::size_t n) {
  require(n >= 1, "uniform design needs at least one point");
  return Design(Vector(n, 1.0 / static_cast<double>(n)));
}

Design Design::point_mass(std::size_t n, std::size_t at) {
  require(at < n, "point mass index out of range");
  Vector w(n, 0.0);
  w[at] = 1.0;
  return Design(std::move(w));
}

Design Design::normalized(Vector weights) {
  double sum = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w >= 0.0, "design weights must be finite and non-negative");
    sum += w;
  }
  require(sum > 0.0, "design weights sum to zero");
  for (double& w : weights) w /= sum;
  return Design(std::move(weights));
}

std::vector<std::size_t> Design::support(double floor) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < weights_.size(); ++i)
    if (weights_[i] >= floor) idx.push_back(i);
  return idx;
}

ImplementableDesign::ImplementableDesign(std::vector<long> c) : counts(std::move(c)) {
  require(!counts.empty(), "implementable design needs at least one point");
  n = 0;
  for (long v : counts) {
    require(v >= 0, "replicate counts must be non-negative");
    n += v;
  }
  require(n > 0, "implementable design needs at least one observation");
}

Design ImplementableDesign::as_design() const {
  Vector w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) w[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
  return Design::normalized(std::move(w));
}

std::size_t ImplementableDesign::support_size() const {
  return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](long v) { return v > 0; }));
}

MomentSet moments(const ModelBasis& basis, const Design& xi) {
  require(xi.size() == basis.points(), "design length does not match the design space");
  MomentSet ms;
  ms.weights = xi.weights();
  Vector sq(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) sq[i] = xi[i] * xi[i];
  ms.R = weighted_gram(basis.Q, ms.weights);
  ms.S = weighted_gram(basis.Q, sq);
  ms.M0 = weighted_gram(basis.F, ms.weights);
  ms.support_size = xi.support().size();
  ms.ch_min_R = sym_eigen(ms.R).min();
  if (!(ms.ch_min_R >= 1e-10))
    fail(ErrorKind::SingularInformation, "design does not support the model (ch_min R = " + std::to_string(ms.ch_min_R) + ")");
  ms.R_inv = spd_inverse(ms.R);
  ms.U = symmetrize(ms.R_inv * ms.S * ms.R_inv);
  return ms;
}

MomentSet moments(const Matrix& F, const Design& xi) { return moments(make_basis(F), xi); }

Vector bias_vector(const ModelBasis& basis, const Design& xi, std::span<const double> tau) {
  require(tau.size() == basis.points(), "disturbance length does not match the design space");
  return weighted_xty(basis.F, xi.weights(), tau);
}

Disturbance::Disturbance(const ModelBasis& basis, Vector tau, double kappa, long n)
    : tau_(std::move(tau)), kappa_(kappa), n_(n) {
  require(tau_.size() == basis.points(), "disturbance length does not match the design space");
  require(kappa >= 0.0 && std::isfinite(kappa), "kappa must be non-negative");
  require(n >= 1, "n must be positive");
  const Vector ft = weighted_xty(basis.F, {}, tau_);
  require(norm2(ft) <= 1e-8 * frobenius_norm(basis.F) * norm2(tau_) + 1e-300,
          "disturbance is not orthogonal to the regressors");
  const double bound = kappa * kappa / static_cast<double>(n);
  require(sum_of_squares() <= bound + 1e-10 * std::max(1.0, bound), "disturbance exceeds the bound kappa^2/n");
}

Disturbance Disturbance::tightest(const ModelBasis& basis, Vector tau, long n) {
  require(n >= 1, "n must be positive");
  double ss = 0.0;
  for (double t : tau) ss += t * t;
  const double kappa = ss > 0.0 ? std::sqrt(ss * static_cast<double>(n)) : 1.0;
  return Disturbance(basis, std::move(tau), kappa, n);
}

Disturbance Disturbance::zero(const ModelBasis& basis, double kappa, long n) {
  return Disturbance(basis, Vector(basis.points(), 0.0), kappa, n);
}

double Disturbance::sum_of_squares() const {
  double s = 0.0;
  for (double t : tau_) s += t * t;
  return s;
}

TargetParameter target_parameter(const Matrix& F, std::span<const double> true_mean) {
  require(true_mean.size() == F.rows(), "mean vector length does not match F");
  orthonormal_basis(F);
  const Matrix A = weighted_gram(F);
  TargetParameter tp;
  tp.theta0 = solve_spd(A, weighted_xty(F, {}, true_mean));
  const Vector fitted = F * std::span<const double>(tp.theta0);
  tp.tau.resize(true_mean.size());
  for (std::size_t i = 0; i < true_mean.size(); ++i) tp.tau[i] = true_mean[i] - fitted[i];
  return tp;
}

InformationDiagnostic information_diagnostic(const MomentSet& ms) {
  InformationDiagnostic d;
  d.ch_min_M0 = sym_eigen(ms.M0).min();
  d.flagged = d.ch_min_M0 < 1e-8;
  return d;
}

}  // namespace mmrd
