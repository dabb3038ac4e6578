#include "mmrd/optimizer/optimizer.hpp"

#include <cmath>
#include <limits>

#include "mmrd/design/csv_io.hpp"
#include "mmrd/errors.hpp"

namespace mmrd {

void write_trace_csv(const std::filesystem::path& path, const TraceLog& trace) {
  std::vector<std::vector<double>> rows;
  rows.reserve(trace.size());
  for (const auto& r : trace)
    rows.push_back({static_cast<double>(r.iter), static_cast<double>(r.chosen_index), r.t_value, r.i_nu});
  csv::write(path, {"iter", "chosen_index", "t_value", "i_nu"}, rows);
}

Vector addition_losses(const ModelBasis& basis, const MomentSet& ms, double k, double nu) {
  const std::size_t N = basis.points();
  const std::size_t p = basis.params();
  const double a = k / (k + 1.0);
  const double b = 1.0 / (k + 1.0);
  Vector out(N);
  Matrix R(p, p), S(p, p);
  for (std::size_t i = 0; i < N; ++i) {
    // R' = (kR + qqᵀ)/(k+1),  S' = (k²S + (2kξ_i + 1)qqᵀ)/(k+1)²
    const auto q = basis.Q.row(i);
    const double s_coef = (2.0 * k * ms.weights[i] + 1.0) * b * b;
    for (std::size_t r = 0; r < p; ++r)
      for (std::size_t c = 0; c < p; ++c) {
        R(r, c) = a * ms.R(r, c) + b * q[r] * q[c];
        S(r, c) = a * a * ms.S(r, c) + s_coef * q[r] * q[c];
      }
    try {
      out[i] = i_nu_from(R, S, nu);
    } catch (const Error&) {
      out[i] = std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

Vector t_values(const ModelBasis& basis, const Design& xi_k, double k, double nu) {
  require(k > 0.0, "k must be positive");
  const MomentSet ms = moments(basis, xi_k);
  const double current = evaluate(ms, LossParams::from_nu(nu)).i_nu;
  Vector t = addition_losses(basis, ms, k, nu);
  for (double& v : t) v = k * (current - v);
  return t;
}

namespace {

// Index of the smallest value; values within `rel` of the minimum tie and the
// lowest index wins.
std::size_t argmin_lowest(const Vector& v, double rel) {
  double best = std::numeric_limits<double>::infinity();
  for (double x : v) best = std::min(best, x);
  const double tol = rel * std::max(1.0, std::abs(best));
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] <= best + tol) return i;
  return 0;
}

}  // namespace

OptimizerResult sequential_minimax(const ModelBasis& basis, const OptimizerConfig& cfg) {
  const std::size_t N = basis.points();
  require(cfg.nu >= 0.0 && cfg.nu <= 1.0, "nu must lie in [0, 1]");
  require(cfg.tol_rel > 0.0, "tol_rel must be positive");
  require(cfg.window >= 1, "window must be positive");
  require(cfg.max_iters >= static_cast<long>(N), "max_iters must be at least N");

  const Design init = cfg.init.value_or(Design::uniform(N));
  require(init.size() == N, "initial design length does not match the design space");
  double k = cfg.init_k > 0.0 ? cfg.init_k : static_cast<double>(N);
  Vector counts(N);
  for (std::size_t i = 0; i < N; ++i) counts[i] = k * init[i];

  const LossParams params = LossParams::from_nu(cfg.nu);
  MomentSet ms = moments(basis, init);  // SingularInformation for a bad start
  double current = evaluate(ms, params).i_nu;

  OptimizerResult result{init, {}, false, k, current, current};
  Vector best_counts = counts;
  double best_k = k;
  double best = current;

  for (long iter = 1; iter <= cfg.max_iters; ++iter) {
    const Vector losses = addition_losses(basis, ms, k, cfg.nu);
    const std::size_t chosen = argmin_lowest(losses, 1e-12);
    if (!std::isfinite(losses[chosen])) fail(ErrorKind::SingularInformation, "no admissible point to add");

    // Nothing moves the loss (e.g. a one-point space): already optimal.
    double spread = 0.0;
    for (double l : losses) spread = std::max(spread, std::abs(l - current));
    if (spread <= 1e-14 * (1.0 + std::abs(current))) {
      result.converged = true;
      break;
    }

    const double t = k * (current - losses[chosen]);
    counts[chosen] += 1.0;
    k += 1.0;
    Vector w(N);
    for (std::size_t i = 0; i < N; ++i) w[i] = counts[i] / k;
    ms = moments(basis, Design::normalized(std::move(w)));
    current = evaluate(ms, params).i_nu;
    if (current < best) {
      best = current;
      best_counts = counts;
      best_k = k;
    }
    result.trace.push_back({iter, chosen, t, current, best});

    const auto m = static_cast<long>(result.trace.size());
    if (m > cfg.window) {
      const double before = result.trace[static_cast<std::size_t>(m - 1 - cfg.window)].best_i_nu;
      if (before - best <= cfg.tol_rel * std::abs(best)) {
        result.converged = true;
        break;
      }
    }
  }

  Vector w(N);
  for (std::size_t i = 0; i < N; ++i) w[i] = best_counts[i] / best_k;
  result.design = Design::normalized(std::move(w));
  result.k_final = best_k;
  result.i_nu = evaluate(moments(basis, result.design), params).i_nu;
  return result;
}

OptimizerResult sequential_minimax(const DesignSpace& space, const ModelSpec& model, const OptimizerConfig& cfg) {
  return sequential_minimax(make_basis(space, model), cfg);
}

RoundedDesign make_implementable(const ModelBasis& basis, const Design& xi, long n, double nu,
                                 double support_floor) {
  const std::size_t N = basis.points();
  require(xi.size() == N, "design length does not match the design space");
  require(n >= static_cast<long>(basis.params()), "n must be at least the number of parameters");
  require(!xi.support(support_floor).empty(), "design has no support above the floor");

  std::vector<long> counts(N, 0);
  long total = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (xi[i] < support_floor) continue;
    // Guard against n·ξ landing a hair above an integer through rounding.
    const double target = static_cast<double>(n) * xi[i];
    counts[i] = static_cast<long>(std::ceil(target - 1e-9 * std::max(1.0, target)));
    counts[i] = std::max(counts[i], 1L);
    total += counts[i];
  }

  const LossParams params = LossParams::from_nu(nu);
  // Only reachable through rounding in n·ξ: top up where it helps most.
  while (total < n) {
    Vector losses(N, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < N; ++i) {
      if (counts[i] == 0) continue;
      std::vector<long> trial = counts;
      ++trial[i];
      try {
        losses[i] = evaluate(moments(basis, ImplementableDesign(trial).as_design()), params).i_nu;
      } catch (const Error&) {
      }
    }
    const std::size_t chosen = argmin_lowest(losses, 1e-12);
    ++counts[chosen];
    ++total;
  }

  long removals = 0;
  while (total > n) {
    Vector losses(N, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < N; ++i) {
      if (counts[i] == 0) continue;
      std::vector<long> trial = counts;
      --trial[i];
      try {
        losses[i] = evaluate(moments(basis, ImplementableDesign(trial).as_design()), params).i_nu;
      } catch (const Error&) {
      }
    }
    double best = std::numeric_limits<double>::infinity();
    for (double l : losses) best = std::min(best, l);
    if (!std::isfinite(best)) fail(ErrorKind::InfeasibleRounding, "every removal leaves a singular design; n is too small");
    const double tol = 1e-12 * std::max(1.0, std::abs(best));
    std::size_t chosen = 0;
    for (std::size_t i = N; i-- > 0;)
      if (losses[i] <= best + tol) {
        chosen = i;
        break;
      }
    --counts[chosen];
    --total;
    ++removals;
  }

  ImplementableDesign design(std::move(counts));
  LossReport loss;
  try {
    loss = evaluate(moments(basis, design.as_design()), params);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SingularInformation)
      fail(ErrorKind::InfeasibleRounding, "rounded design does not support the model");
    throw;
  }
  return {std::move(design), loss, removals};
}

}  // namespace mmrd
