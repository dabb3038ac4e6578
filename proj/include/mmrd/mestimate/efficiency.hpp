#pragma once

// Asymptotic variance factors of M-estimates and the induced change in the
// bias/variance emphasis ν when least squares is replaced by a Huber estimate.

#include <functional>
#include <span>
#include <vector>

#include "mmrd/mestimate/psi.hpp"

namespace mmrd {

/// σ_M²/σ² for Huber's ψ with tuning c under N(0, σ²) errors:
///   G(c) = [1 - 2cφ(c) + 2(c² - 1)Φ(-c)] / (1 - 2Φ(-c))².
/// Decreasing from π/2 (c → 0, the median) to 1 (c → ∞, the mean). Below
/// c = 1e-4 the quotient is 0/0 in floating point and a Taylor expansion
/// about c = 0 is used instead.
double huber_efficiency_factor(double c);

/// G(c) - 1, accurate where G itself rounds to 1 (large c).
double huber_efficiency_excess(double c);

/// σ_M² = E[ψ_σ²(ε)] / (E[ψ_σ'(ε)])² for ε ~ N(0, σ²).
double sigma_m_squared_normal(const PsiSpec& psi, double sigma);

/// Same, for a symmetric error density; ψ is applied at scale `scale`.
double sigma_m_squared_density(const PsiSpec& psi, const std::function<double(double)>& pdf, double scale);

/// Plug-in moments over an error sample. `scale` defaults to the sample's MAD/Φ⁻¹(¾).
double sigma_m_squared_sample(const PsiSpec& psi, std::span<const double> errors, double scale = 0.0);

struct NuCalculus {
  double c = 0.0;
  double gamma_sq = 0.0;
  double G = 1.0;
  double nu_ls = 0.0;  // 1/(γ² + 1)
  double nu_m = 0.0;   // 1/(γ²·G + 1)
  double diff = 0.0;   // nu_ls - nu_m
};

NuCalculus nu_calculus_from_factor(double G, double gamma_sq, double c = 0.0);
NuCalculus nu_calculus(double c, double gamma_sq);

struct NuTable {
  std::vector<NuCalculus> rows;  // c-major, gamma_sq-minor
  std::size_t argmax = 0;
  NuCalculus refined;            // γ² polished by golden section at the argmax c
};

NuTable nu_analysis(std::span<const double> c_grid, std::span<const double> gamma_sq_grid);

/// Upper bound of nu_ls - nu_m over all c and γ²: (√(π/2) - 1)/(√(π/2) + 1).
double max_nu_difference();

std::vector<double> log_grid(double lo, double hi, std::size_t n);
std::vector<double> linear_grid(double lo, double hi, std::size_t n);

}  // namespace mmrd
