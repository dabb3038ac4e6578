#pragma once

// Integrated predictor variance under equicorrelated errors, compared with
// the i.i.d. loss at the inflated variance η² = α²_max·(1 + (n-1)·ρ_max).

#include <filesystem>
#include <span>
#include <vector>

#include "mmrd/simulate/monte_carlo.hpp"

namespace mmrd {

/// C = α²((1-ρ)I + ρ𝟙𝟙ᵀ), n x n.
Matrix equicorrelation_matrix(std::size_t n, double alpha_sq, double rho);

double eta_squared(double alpha_max_sq, long n, double rho_max);

/// Least-squares integrated predictor variance tr(A·G·C·Gᵀ), G = (XᵀX)⁻¹Xᵀ.
double ls_predictor_variance(const Matrix& A, const Matrix& X, const Matrix& C);

/// Closed form of the above for C = equicorrelation_matrix(n, α², ρ).
double ls_equicorrelated_variance(const Matrix& A, const Matrix& X, double alpha_sq, double rho);

struct DependenceRow {
  double rho = 0.0;
  double empirical_var = 0.0;
  double bound = 0.0;
  double std_err = 0.0;
  double analytic_var = 0.0;  // least-squares only; NaN for other ψ
};

struct DependenceSweep {
  std::vector<DependenceRow> rows;
  double eta_sq = 0.0;
  double rho_max = 0.0;
  bool within_bound = true;           // every empirical_var ≤ bound + 3·std_err
  bool analytic_within_bound = true;  // every analytic_var ≤ bound (least squares)
  double tightness_gap = 0.0;         // |ch_max C(ρ_max) - η²|
};

/// For each ρ the design is simulated under equicorrelated normal errors with
/// variance α²_max and τ = 0. `rho_grid` must lie in [0, ρ_max] where ρ_max is its largest entry.
DependenceSweep dependence_sweep(const ModelBasis& basis, const ImplementableDesign& design, const PsiSpec& psi,
                                 std::span<const double> rho_grid, double alpha_max_sq, long reps,
                                 std::uint64_t seed, unsigned threads = 0);

/// CSV with header rho,empirical_var,bound,std_err.
void write_sweep_csv(const std::filesystem::path& path, const DependenceSweep& sweep);

}  // namespace mmrd
