#pragma once

// Symmetric error generators for Monte Carlo experiments.

#include <cstdint>
#include <random>
#include <span>
#include <string>

#include "mmrd/mestimate/psi.hpp"

namespace mmrd {

/// SplitMix64 finalizer applied to (seed, stream): the seed of stream `stream`.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

using Rng = std::mt19937_64;

/// Independent generator for replicate `stream`; the same (seed, stream)
/// always yields the same sequence regardless of scheduling.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

enum class ErrorFamily { Normal, ContaminatedNormal, StudentT, Equicorrelated };

struct ErrorModel {
  ErrorFamily family = ErrorFamily::Normal;
  double sigma = 1.0;    // normal sd; scale for student_t
  double frac = 0.0;     // contaminated_normal: probability of the inflated component
  double inflate = 1.0;  // contaminated_normal: sd multiplier of that component
  double df = 5.0;       // student_t
  double rho = 0.0;      // equicorrelated: common correlation in [0, 1)
  std::uint64_t seed = 0;

  static ErrorModel normal(double sigma, std::uint64_t seed = 0);
  static ErrorModel contaminated_normal(double sigma, double frac, double inflate, std::uint64_t seed = 0);
  static ErrorModel student_t(double df, double scale, std::uint64_t seed = 0);
  /// ε_i = σ(√(1-ρ)·z_i + √ρ·z₀) with one shared z₀ per sample.
  static ErrorModel equicorrelated(double sigma, double rho, std::uint64_t seed = 0);

  std::string name() const;

  /// Fills one sample of correlated-or-independent errors.
  void draw(Rng& rng, std::span<double> out) const;

  /// Marginal density and variance (+inf when it does not exist).
  double pdf(double x) const;
  double variance() const;

  /// median|ε| / Φ⁻¹(3/4): the limit of the MAD scale used by the fits.
  double mad_scale() const;
};

/// σ_M² under the marginal error law, with ψ applied at the MAD scale.
double sigma_m_squared(const PsiSpec& psi, const ErrorModel& err);

}  // namespace mmrd
