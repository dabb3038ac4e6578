#pragma once

// Worst-case integrated mean squared error of the fitted predictions.
//
// For a design ξ the maximum IMSE over all admissible contaminations is
// J(ξ)/n with J = σ_M²·tr R⁻¹ + κ²·ch_max U, and the scale-free criterion
// minimized by the optimizer is I_ν = (1-ν)·tr R⁻¹ + ν·ch_max U.

#include <optional>

#include "mmrd/design/design.hpp"

namespace mmrd {

struct LossParams {
  struct Raw {
    double kappa;
    double sigma_m2;
    double eta0_sq;
  };

  double nu = 0.0;
  std::optional<Raw> raw;

  static LossParams from_nu(double nu);
  /// ν = κ² / (η₀²σ_M² + κ²).
  static LossParams from_raw(double kappa, double sigma_m2, double eta0_sq = 1.0);
};

/// ν for a given (κ, σ_M², η₀²).
double nu_from_raw(double kappa, double sigma_m2, double eta0_sq);

struct LossReport {
  double trace_term = 0.0;  // tr R⁻¹
  double bias_term = 0.0;   // ch_max U
  double i_nu = 0.0;
  std::optional<double> j_value;
  std::size_t support_size = 0;
};

LossReport evaluate(const MomentSet& ms, const LossParams& params);

/// I_ν straight from R and S; used by the optimizer's candidate scans.
/// Throws SingularInformation if R is not positive definite.
double i_nu_from(const Matrix& R, const Matrix& S, double nu);

/// The contamination attaining the maximum IMSE.
struct WorstCaseTau {
  Vector tau;               // τ over the design space, Στ² = κ²/n
  Vector direction;         // unit-norm τ₀ = Q⊥β, expressed in R^N
  double attained_bias = 1.0;  // ch_max U
  std::size_t multiplicity = 1;
  bool degenerate_complement = false;  // N == p: τ ≡ 0
  double kappa = 0.0;
  long n = 0;

  Disturbance disturbance(const ModelBasis& basis) const;
};

WorstCaseTau worst_case_tau(const ModelBasis& basis, const MomentSet& ms, double kappa, long n);

/// τ₀ᵀ D Q R⁻² Qᵀ D τ₀ for a unit τ₀ orthogonal to col(F); its maximum is ch_max U - 1.
double bias_quadratic_form(const ModelBasis& basis, const MomentSet& ms, std::span<const double> tau0);

/// Στ² + b₀ᵀM₀⁻¹AM₀⁻¹b₀ + (σ_M²/n)·tr(AM₀⁻¹) for the design carried by `ms`.
double imse_exact(const ModelBasis& basis, const MomentSet& ms, const Disturbance& tau, double sigma_m2);

}  // namespace mmrd
