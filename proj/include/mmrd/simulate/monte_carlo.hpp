#pragma once

// Replicated fits at a fixed implementable design, compared against the
// large-sample normal approximation
//   θ̂ - θ₀ ≈ N(M₀⁻¹b₀, (σ_M²/n)·M₀⁻¹)
// and against the exact worst-case IMSE.

#include <cstdint>
#include <optional>

#include "mmrd/design/design.hpp"
#include "mmrd/mestimate/fit.hpp"
#include "mmrd/simulate/error_model.hpp"

namespace mmrd {

struct MCConfig {
  long reps = 2000;
  unsigned threads = 0;  // 0: hardware concurrency
  std::optional<Vector> theta0;  // true parameter; ones when absent
  FitOptions fit;
  double max_failure_rate = 0.05;
};

struct MCReport {
  long requested = 0;
  long replicates = 0;  // converged replicates used in the moments
  long failures = 0;
  double convergence_rate = 1.0;
  long n = 0;
  std::uint64_t seed = 0;

  Vector theta0;
  double sigma_m2 = 0.0;

  Vector empirical_bias;    // mean of θ̂ - θ₀
  Vector bias_std_err;
  Matrix empirical_cov;
  Vector predicted_bias;    // M₀⁻¹b₀
  Matrix predicted_cov;     // (σ_M²/n)·M₀⁻¹
  double cov_relative_gap = 0.0;  // ‖Ĉ - C‖_F / ‖C‖_F
  Vector bias_z;                  // (empirical - predicted) / std_err

  double empirical_imse = 0.0;  // mean over replicates of Σ_χ (f'θ̂ - E[Y])²
  double imse_std_err = 0.0;
  double predicted_imse = 0.0;  // exact IMSE of the first-order approximation at this τ
  std::optional<double> j_over_n;  // σ_M²·tr R⁻¹ + κ²·ch_max U, divided by n

  Vector ks_distance;  // per component of √n·M₀^{1/2}(θ̂ - θ₀ - M₀⁻¹b₀)/σ_M
  double ks_threshold = 0.0;
};

/// Runs `cfg.reps` independent fits. Replicate r draws from make_stream(err.seed, r).
/// Throws NoConvergence if more than `max_failure_rate` of the replicates fail.
MCReport run_mc(const ModelBasis& basis, const ImplementableDesign& design, const PsiSpec& psi,
                const ErrorModel& err, const Disturbance& tau, const MCConfig& cfg = {});

/// Kolmogorov distance between a sample and the standard normal.
double ks_distance_normal(Vector sample);

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace mmrd
