#pragma once

// Regression M-estimation with an auxiliary MAD scale:
//   0 = Σ ψ((Y_ij - f(x_i)ᵀθ)/σ̂) f(x_i),   σ̂ = median|residual| / Φ⁻¹(3/4),
// solved by alternating the scale update with an IRLS step.

#include <span>

#include "mmrd/design/design.hpp"
#include "mmrd/mestimate/psi.hpp"

namespace mmrd {

/// Φ⁻¹(p) for the standard normal.
double normal_quantile(double p);
double normal_cdf(double x);
double normal_pdf(double x);

/// Φ⁻¹(0.75), the MAD consistency constant for normal data.
double mad_constant();

/// One row of regressors per observation.
struct Observations {
  Matrix X;  // n x p
  Vector y;  // n
};

/// Expands replicate counts into observation rows of F (row i repeated n_i times).
Matrix replicate_rows(const Matrix& F, std::span<const long> counts);

/// Maps raw x rows (as read from a dataset) onto regressor rows.
Matrix regressor_rows(const DesignSpace& space, const ModelSpec& model, const Matrix& xs);

struct FitOptions {
  int max_iters = 500;
  double tol = 1e-10;  // on ‖Δθ‖ / (1 + ‖θ‖)
};

struct FitResult {
  Vector theta_hat;
  double sigma_hat = 0.0;
  int iterations = 0;
  bool converged = false;
  bool scale_collapse = false;  // exact fit: LS solution returned with σ̂ = 0
  Vector residuals;
  Vector weights;
  double estimating_equation_norm = 0.0;  // ‖Σ ψ(r/σ̂) f‖
};

FitResult fit(const Observations& data, const PsiSpec& psi, const FitOptions& opts = {});

/// Reusable buffers for repeated fits of the same shape (Monte Carlo loops).
struct FitWorkspace {
  Vector residuals;
  Vector weights;
  Vector abs_residuals;
};

FitResult fit(const Observations& data, const PsiSpec& psi, const FitOptions& opts, FitWorkspace& ws);

/// ‖Σ ψ(r_j/σ) x_j‖ for the given parameter and scale.
double estimating_equation_norm(const Observations& data, const PsiSpec& psi, std::span<const double> theta,
                                double sigma);

}  // namespace mmrd
