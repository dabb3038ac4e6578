#pragma once

// Sequential construction of minimax designs and rounding to integer
// allocations.
//
// The current design is carried as virtual replicate counts m_i with total k,
// so ξ_k = m/k. Each step evaluates, for every grid point, the exact loss of
// ξ_k^(i) = (k·ξ_k + e_i)/(k+1) and adds the point with the largest
//   t_{k,i} = k·[I_ν(ξ_k) - I_ν(ξ_k^(i))].
// Points are added even when max t is negative; the returned design is the
// best one visited.

#include <filesystem>
#include <optional>
#include <vector>

#include "mmrd/design/design.hpp"
#include "mmrd/loss/loss.hpp"

namespace mmrd {

struct OptimizerConfig {
  double nu = 0.0;
  std::optional<Design> init;     // uniform when absent
  double init_k = 0.0;            // virtual sample count of `init`; 0 means N
  long max_iters = 5000;
  double tol_rel = 1e-7;          // relative improvement of the best loss over `window` steps
  long window = 50;
  double support_floor = kSupportFloor;
};

struct TraceRecord {
  long iter = 0;
  std::size_t chosen_index = 0;
  double t_value = 0.0;
  double i_nu = 0.0;       // loss of the design after this step
  double best_i_nu = 0.0;  // best loss seen so far (non-increasing)
};

using TraceLog = std::vector<TraceRecord>;

void write_trace_csv(const std::filesystem::path& path, const TraceLog& trace);

struct OptimizerResult {
  Design design;
  TraceLog trace;
  bool converged = false;  // false: iteration budget exhausted, best-so-far returned
  double k_final = 0.0;    // virtual count at the returned design
  double initial_i_nu = 0.0;
  double i_nu = 0.0;
};

OptimizerResult sequential_minimax(const ModelBasis& basis, const OptimizerConfig& cfg);
OptimizerResult sequential_minimax(const DesignSpace& space, const ModelSpec& model, const OptimizerConfig& cfg);

/// t_{k,i} for every grid point, from exact re-evaluation of the loss.
Vector t_values(const ModelBasis& basis, const Design& xi_k, double k, double nu);

/// Loss of (k·ξ + e_i)/(k+1) for every i (+inf where R would be singular).
Vector addition_losses(const ModelBasis& basis, const MomentSet& ms, double k, double nu);

struct RoundedDesign {
  ImplementableDesign design;
  LossReport loss;
  long removals = 0;
};

/// ⌈n·ξ_i⌉ on the support, then one replicate at a time is removed from the
/// point whose removal raises I_ν least, until Σn_i = n. Ties keep the lower
/// index (the replicate is taken from the highest tied index).
RoundedDesign make_implementable(const ModelBasis& basis, const Design& xi, long n, double nu,
                                 double support_floor = kSupportFloor);

}  // namespace mmrd
