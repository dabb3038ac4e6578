#pragma once

#include <string>

namespace mmrd {

enum class PsiFamily { Identity, Huber, SmoothedHuber, TanhSign };

/// Score function ψ of an M-estimate, evaluated on standardized residuals.
///
///   identity        ψ(x) = x                      (least squares)
///   huber(c)        ψ(x) = max(-c, min(c, x))
///   smoothed_huber  ψ(x) = x / sqrt(1 + (x/c)²)   (pseudo-Huber score)
///   tanh_sign(s)    ψ(x) = tanh(x/s)              (smooth sign, L1 surrogate)
struct PsiSpec {
  PsiFamily family = PsiFamily::Identity;
  double tuning = 1.0;

  static PsiSpec identity() { return {PsiFamily::Identity, 1.0}; }
  static PsiSpec huber(double c);
  static PsiSpec smoothed_huber(double c);
  static PsiSpec tanh_sign(double s);
  /// "identity" | "ls" | "huber" | "smoothed_huber" | "tanh_sign"
  static PsiSpec parse(const std::string& family, double tuning);

  std::string name() const;

  double psi(double x) const;
  double dpsi(double x) const;
  /// Second derivative; zero almost everywhere for huber, whose kinks at ±c make it non-smooth.
  double d2psi(double x) const;
  /// IRLS weight ψ(x)/x, with ψ'(0) at x = 0.
  double weight(double x) const;

  bool twice_differentiable() const { return family != PsiFamily::Huber; }
  /// Points where ψ' jumps (empty for smooth families).
  double kink() const { return family == PsiFamily::Huber ? tuning : 0.0; }
};

/// Numerical checks of the regularity assumed for ψ: oddness, monotonicity,
/// bounded derivatives, and agreement of ψ'' with finite differences.
struct PsiDiagnostics {
  bool odd = false;
  bool monotone = false;
  bool twice_differentiable = false;
  double m1 = 0.0;  // max ψ_σ' over the probed range
  double m2 = 0.0;  // max |ψ_σ''| over the probed range
  double max_second_derivative_error = 0.0;  // closed form vs finite differences
};

/// Probes ψ_σ(x) = ψ(x/σ) on `points` equally spaced values in [-range, range].
PsiDiagnostics psi_diagnostics(const PsiSpec& psi, double sigma = 1.0, double range = 10.0, int points = 10000);

}  // namespace mmrd
