#pragma once

// Finite design spaces, regression bases, designs and their moment matrices.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mmrd/numerics/linalg.hpp"
#include "mmrd/numerics/matrix.hpp"

namespace mmrd {

/// N distinct points in R^q, stored one per row.
class DesignSpace {
 public:
  explicit DesignSpace(Matrix points);

  /// N equally spaced points spanning [lo, hi].
  static DesignSpace grid(double lo, double hi, std::size_t n);

  std::size_t size() const noexcept { return points_.rows(); }
  std::size_t dimension() const noexcept { return points_.cols(); }
  std::span<const double> point(std::size_t i) const { return points_.row(i); }
  const Matrix& points() const noexcept { return points_; }

  /// Index of the point equal to `x` within `tol`, if any.
  std::optional<std::size_t> find(std::span<const double> x, double tol = 1e-9) const;

 private:
  Matrix points_;
};

/// One regressor: the product of coordinate powers x_1^e_1 ... x_q^e_q.
using Monomial = std::vector<int>;

/// Regressor basis f(x). Either monomials evaluated on the space, or an
/// explicit F matrix supplied by the user (one row per design point).
class ModelSpec {
 public:
  /// 1, x, ..., x^degree for a one-dimensional space.
  static ModelSpec polynomial(int degree);
  static ModelSpec monomials(std::vector<Monomial> terms);
  static ModelSpec external(Matrix F);

  std::size_t size() const;
  bool is_external() const noexcept { return external_.has_value(); }
  const std::vector<Monomial>& terms() const noexcept { return terms_; }
  const std::optional<Matrix>& external_matrix() const noexcept { return external_; }

  /// f(x) for a single point; not available for external bases.
  Vector evaluate(std::span<const double> x) const;

 private:
  std::vector<Monomial> terms_;
  std::optional<Matrix> external_;
};

/// F = [f(x_1), ..., f(x_N)]ᵀ. Throws RankDeficient unless rank p.
Matrix build_regressors(const DesignSpace& space, const ModelSpec& model);

/// Everything about the regressors that does not depend on the design:
/// F, its orthonormal factor Q (F = Q·T) and A = FᵀF.
struct ModelBasis {
  Matrix F;
  Matrix Q;
  Matrix T;
  Matrix A;

  std::size_t points() const noexcept { return F.rows(); }
  std::size_t params() const noexcept { return F.cols(); }
};

ModelBasis make_basis(Matrix F);
ModelBasis make_basis(const DesignSpace& space, const ModelSpec& model);

inline constexpr double kSupportFloor = 1e-12;

/// Probability weights over the N points of a design space.
class Design {
 public:
  /// Validates ξ_i ≥ 0 and Σξ_i = 1 within 1e-12.
  explicit Design(Vector weights);

  static Design uniform(std::size_t n);
  static Design point_mass(std::size_t n, std::size_t at);
  /// Rescales non-negative weights to sum to one.
  static Design normalized(Vector weights);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const noexcept { return weights_[i]; }
  const Vector& weights() const noexcept { return weights_; }

  /// Indices with weight at or above `floor`.
  std::vector<std::size_t> support(double floor = kSupportFloor) const;

 private:
  Vector weights_;
};

/// Integer replicate counts n_i with Σn_i = n.
struct ImplementableDesign {
  std::vector<long> counts;
  long n = 0;

  explicit ImplementableDesign(std::vector<long> counts);
  Design as_design() const;
  std::size_t support_size() const;
};

/// Moment matrices of a design: R = QᵀDQ, S = QᵀD²Q, U = R⁻¹SR⁻¹, M₀ = FᵀDF.
struct MomentSet {
  Vector weights;
  Matrix R;
  Matrix S;
  Matrix R_inv;
  Matrix U;
  Matrix M0;
  double ch_min_R = 0.0;
  std::size_t support_size = 0;
};

/// Throws SingularInformation when ch_min R < 1e-10.
MomentSet moments(const ModelBasis& basis, const Design& xi);
MomentSet moments(const Matrix& F, const Design& xi);

/// b₀(ξ) = Σ ξ_i f(x_i) τ(x_i).
Vector bias_vector(const ModelBasis& basis, const Design& xi, std::span<const double> tau);

/// A contamination τ over the design space with Fᵀτ = 0 and Στ² ≤ κ²/n.
class Disturbance {
 public:
  /// Validates orthogonality (‖Fᵀτ‖ ≤ 1e-8·‖F‖·‖τ‖) and the norm bound.
  Disturbance(const ModelBasis& basis, Vector tau, double kappa, long n);
  /// Smallest κ admitting τ at sample size n.
  static Disturbance tightest(const ModelBasis& basis, Vector tau, long n);
  static Disturbance zero(const ModelBasis& basis, double kappa, long n);

  const Vector& tau() const noexcept { return tau_; }
  double kappa() const noexcept { return kappa_; }
  long n() const noexcept { return n_; }
  double sum_of_squares() const;

 private:
  Vector tau_;
  double kappa_;
  long n_;
};

/// θ₀ = argmin Σ(E[Y(x_i)] - f(x_i)ᵀθ)² and the residual τ = E[Y] - Fθ₀.
struct TargetParameter {
  Vector theta0;
  Vector tau;
};

TargetParameter target_parameter(const Matrix& F, std::span<const double> true_mean);

/// Smallest eigenvalue of M₀(ξ); values below 1e-8 are flagged.
struct InformationDiagnostic {
  double ch_min_M0 = 0.0;
  bool flagged = false;
};

InformationDiagnostic information_diagnostic(const MomentSet& ms);

}  // namespace mmrd
