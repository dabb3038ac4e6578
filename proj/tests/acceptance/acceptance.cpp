// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--only K,...] [--expect-fail K,...]
// The exit status is 0 when the set of failing criteria equals the
// --expect-fail set (empty by default), 1 otherwise.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "mmrd/errors.hpp"
#include "mmrd/loss/loss.hpp"
#include "mmrd/mestimate/efficiency.hpp"
#include "mmrd/optimizer/optimizer.hpp"
#include "mmrd/simulate/dependence.hpp"
#include "mmrd/simulate/monte_carlo.hpp"
#include "oracles.hpp"

using namespace mmrd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ModelBasis line_basis(int degree) { return make_basis(DesignSpace::grid(-1.0, 1.0, 20), ModelSpec::polynomial(degree)); }

OptimizerResult optimize(const ModelBasis& b, double nu) {
  OptimizerConfig cfg;
  cfg.nu = nu;
  return sequential_minimax(b, cfg);
}

std::string counts_string(const std::vector<long>& c) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < c.size(); ++i) os << (i ? "," : "") << c[i];
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------

Outcome linear_i_optimal() {
  const auto t0 = Clock::now();
  const OptimizerResult r = optimize(line_basis(1), 0.0);
  const double secs = seconds_since(t0);
  const Design& w = r.design;
  double interior = 0.0;
  for (std::size_t i = 1; i + 1 < w.size(); ++i) interior = std::max(interior, w[i]);
  const bool ok = std::abs(w[0] - 0.5) < 0.02 && std::abs(w[19] - 0.5) < 0.02 && interior < 0.02 && secs < 5.0;
  return {ok, fmt("w(-1)=%.4f w(+1)=%.4f max interior=%.2e time=%.2fs", w[0], w[19], interior, secs)};
}

struct CubicWeights {
  double ends[2];
  double inner[2];
};

// Indices 5,6 and 13,14 are the grid points on either side of ∓0.4472.
CubicWeights cubic_weights(const Vector& w) {
  return {{w[0], w[19]}, {w[5] + w[6], w[13] + w[14]}};
}

bool cubic_ok(const CubicWeights& c) {
  bool ok = true;
  for (int s = 0; s < 2; ++s) ok = ok && std::abs(c.ends[s] - 0.1545) < 0.03 && std::abs(c.inner[s] - 0.3455) < 0.05;
  return ok;
}

Outcome cubic_i_optimal() {
  const ModelBasis b = line_basis(3);
  const auto t0 = Clock::now();
  const OptimizerResult r = optimize(b, 0.0);
  const double secs = seconds_since(t0);
  const CubicWeights got = cubic_weights(r.design.weights());

  const testing::SimplexMinimum oracle = testing::projected_gradient_trace(b);
  const CubicWeights ref = cubic_weights(oracle.weights);
  const double rel = r.i_nu / oracle.value - 1.0;

  const bool ok = cubic_ok(got) && cubic_ok(ref) && std::abs(rel) < 1e-3 && secs < 30.0;
  return {ok, fmt("ends=(%.4f,%.4f) inner=(%.4f,%.4f) oracle ends=(%.4f,%.4f) inner=(%.4f,%.4f) "
                  "loss vs oracle %+.1e time=%.2fs",
                  got.ends[0], got.ends[1], got.inner[0], got.inner[1], ref.ends[0], ref.ends[1], ref.inner[0],
                  ref.inner[1], rel, secs)};
}

Outcome nu_constants() {
  const auto c_grid = log_grid(1e-4, 10.0, 60);
  const auto g_grid = log_grid(1e-3, 1e2, 400);
  const auto t0 = Clock::now();
  const NuTable t = nu_analysis(c_grid, g_grid);
  const double secs = seconds_since(t0);
  const NuCalculus& m = t.refined;
  const bool ok = std::abs(m.diff - 0.1124) <= 0.001 && std::abs(m.gamma_sq - 0.7979) <= 0.01 &&
                  std::abs(m.nu_ls - 0.5562) <= 0.001 && std::abs(m.nu_m - 0.4438) <= 0.001 && secs < 1.0;
  return {ok, fmt("max diff=%.5f at c=%.0e gamma^2=%.4f nu_ls=%.4f nu_m=%.4f time=%.3fs", m.diff, m.c, m.gamma_sq,
                  m.nu_ls, m.nu_m, secs)};
}

Outcome efficiency_endpoints() {
  const double low = std::abs(huber_efficiency_factor(1e-6) - std::numbers::pi / 2.0);
  const double high = std::abs(huber_efficiency_factor(10.0) - 1.0);
  const auto grid = log_grid(1e-6, 10.0, 1000);
  // G itself rounds to 1 past c ≈ 8, so strictness is judged on G - 1.
  long strict_breaks = 0, g_rises = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(huber_efficiency_excess(grid[i]) < huber_efficiency_excess(grid[i - 1]))) ++strict_breaks;
    if (huber_efficiency_factor(grid[i]) > huber_efficiency_factor(grid[i - 1])) ++g_rises;
  }
  const bool ok = low < 1e-4 && high < 1e-6 && strict_breaks == 0 && g_rises == 0;
  return {ok, fmt("|G(1e-6)-pi/2|=%.2e |G(10)-1|=%.2e non-decreasing steps of G-1: %ld (grid 1e-6..10, 1000 pts)",
                  low, high, strict_breaks)};
}

Outcome worst_case_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> pick_p(1, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> z;
  double worst_excess = -INFINITY, worst_shortfall = 0.0, worst_random_ratio = INFINITY;
  int skipped = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t p = static_cast<std::size_t>(pick_p(rng));
    const std::size_t N = std::uniform_int_distribution<std::size_t>(p + 1, 8)(rng);
    const ModelBasis b = make_basis(testing::random_matrix(rng, N, p));
    const Design xi = Design::normalized(testing::random_simplex(rng, N));
    const long n = std::uniform_int_distribution<long>(static_cast<long>(p), 60)(rng);
    const double sigma_m2 = 0.5 + 1.5 * unit(rng);
    const double kappa = 0.1 + 2.0 * unit(rng);
    MomentSet ms;
    try {
      ms = moments(b, xi);
    } catch (const Error&) {
      ++skipped;
      --inst;
      continue;
    }
    const LossReport rep = evaluate(ms, LossParams::from_nu(0.5));
    const double j_over_n = (sigma_m2 * rep.trace_term + kappa * kappa * rep.bias_term) / static_cast<double>(n);

    const double budget = kappa * kappa / static_cast<double>(n);
    double best_random = 0.0;
    Vector tau(N);
    for (int s = 0; s < 100000; ++s) {
      for (auto& v : tau) v = z(rng);
      // Remove the col(F) component: τ ← τ - Q Qᵀ τ.
      for (std::size_t a = 0; a < p; ++a) {
        double dot = 0.0;
        for (std::size_t i = 0; i < N; ++i) dot += b.Q(i, a) * tau[i];
        for (std::size_t i = 0; i < N; ++i) tau[i] -= dot * b.Q(i, a);
      }
      double ss = 0.0;
      for (double v : tau) ss += v * v;
      const double radius = (s % 4 == 0) ? std::sqrt(unit(rng)) : 1.0;  // mostly on the boundary
      const double scale = std::sqrt(budget / ss) * radius * (1.0 - 1e-12);
      for (auto& v : tau) v *= scale;
      best_random = std::max(best_random, imse_exact(b, ms, Disturbance(b, tau, kappa, n), sigma_m2));
    }
    const WorstCaseTau wc = worst_case_tau(b, ms, kappa, n);
    const double at_worst = imse_exact(b, ms, wc.disturbance(b), sigma_m2);
    const double overall = std::max(best_random, at_worst);
    worst_excess = std::max(worst_excess, overall / j_over_n - 1.0);
    worst_shortfall = std::max(worst_shortfall, 1.0 - overall / j_over_n);
    worst_random_ratio = std::min(worst_random_ratio, best_random / j_over_n);
  }
  const double secs = seconds_since(t0);
  const bool ok = worst_excess <= 1e-6 && worst_shortfall <= 0.01 && secs < 60.0;
  return {ok, fmt("max (IMSE/(J/n) - 1)=%+.2e, max shortfall=%.2e, lowest random-only ratio=%.4f, "
                  "singular draws redrawn=%d time=%.1fs",
                  worst_excess, worst_shortfall, worst_random_ratio, skipped, secs)};
}

Outcome first_order_mc() {
  const auto t0 = Clock::now();
  const ModelBasis b = line_basis(1);
  const double nu = 0.5;
  const OptimizerResult opt = optimize(b, nu);
  const long n = 200;
  const RoundedDesign rd = make_implementable(b, opt.design, n, nu);
  const PsiSpec psi = PsiSpec::huber(1.345);
  const ErrorModel err = ErrorModel::normal(1.0, 7);
  // κ² = σ_M²·η₀² puts the design's ν at 0.5 with η₀² = 1.
  const double kappa = std::sqrt(sigma_m_squared(psi, err));
  const MomentSet ms = moments(b, rd.design.as_design());
  const Disturbance tau = worst_case_tau(b, ms, kappa, n).disturbance(b);
  MCConfig cfg;
  cfg.reps = 2000;
  const MCReport rep = run_mc(b, rd.design, psi, err, tau, cfg);
  const double secs = seconds_since(t0);

  double max_z = 0.0, max_ks = 0.0;
  for (double v : rep.bias_z) max_z = std::max(max_z, std::abs(v));
  for (double v : rep.ks_distance) max_ks = std::max(max_ks, v);
  const bool ok = rep.cov_relative_gap < 0.10 && max_z <= 3.0 && max_ks < rep.ks_threshold && secs < 120.0;
  return {ok, fmt("cov gap=%.4f max |bias z|=%.2f max KS=%.4f (threshold %.4f) replicates=%ld time=%.1fs",
                  rep.cov_relative_gap, max_z, max_ks, rep.ks_threshold, rep.replicates, secs)};
}

Outcome rounding_quality() {
  struct Case {
    int degree;
    long n;
  };
  double worst = 0.0;
  std::string where;
  for (Case c : {Case{1, 10}, Case{3, 20}}) {
    const ModelBasis b = line_basis(c.degree);
    for (double nu : {0.4438, 0.5, 0.5562}) {
      const OptimizerResult opt = optimize(b, nu);
      const RoundedDesign rd = make_implementable(b, opt.design, c.n, nu);
      const double inc = rd.loss.i_nu / opt.i_nu - 1.0;
      if (where.empty() || inc > worst) {
        worst = inc;
        where = fmt("degree %d, n=%ld, nu=%.4f", c.degree, c.n, nu);
      }
    }
  }
  return {worst < 0.02, fmt("largest increase over the continuous design %.3f%% (%s)", 100.0 * worst, where.c_str())};
}

// Exhaustive search over all allocations of n runs to a 2-parameter basis,
// with R, S and U assembled by hand.
struct ExhaustiveBest {
  double loss = INFINITY;
  std::vector<long> counts;
};

ExhaustiveBest exhaustive_linear(const ModelBasis& b, long n, double nu) {
  const std::size_t N = b.points();
  std::vector<long> cnt(N, 0);
  ExhaustiveBest best;
  auto eval = [&] {
    double r00 = 0, r01 = 0, r11 = 0, s00 = 0, s01 = 0, s11 = 0;
    for (std::size_t i = 0; i < N; ++i) {
      if (!cnt[i]) continue;
      const double d = static_cast<double>(cnt[i]) / static_cast<double>(n);
      const double q0 = b.Q(i, 0), q1 = b.Q(i, 1);
      r00 += d * q0 * q0;
      r01 += d * q0 * q1;
      r11 += d * q1 * q1;
      s00 += d * d * q0 * q0;
      s01 += d * d * q0 * q1;
      s11 += d * d * q1 * q1;
    }
    const double det = r00 * r11 - r01 * r01;
    if (det < 1e-10) return;
    const double i00 = r11 / det, i01 = -r01 / det, i11 = r00 / det;
    const double a00 = i00 * s00 + i01 * s01, a01 = i00 * s01 + i01 * s11;
    const double a10 = i01 * s00 + i11 * s01, a11 = i01 * s01 + i11 * s11;
    const double u00 = a00 * i00 + a01 * i01, u01 = a00 * i01 + a01 * i11, u11 = a10 * i01 + a11 * i11;
    const double half = 0.5 * (u00 + u11);
    const double top = half + std::sqrt(std::max(0.0, half * half - (u00 * u11 - u01 * u01)));
    const double loss = (1.0 - nu) * (i00 + i11) + nu * top;
    if (loss < best.loss) {
      best.loss = loss;
      best.counts = cnt;
    }
  };
  std::function<void(std::size_t, long)> rec = [&](std::size_t i, long left) {
    if (i + 1 == N) {
      cnt[i] = left;
      eval();
      cnt[i] = 0;
      return;
    }
    for (long c = 0; c <= left; ++c) {
      cnt[i] = c;
      rec(i + 1, left - c);
    }
    cnt[i] = 0;
  };
  rec(0, n);
  return best;
}

Outcome estimator_insensitivity() {
  const ModelBasis b = line_basis(1);
  const long n = 10;
  std::array<std::vector<long>, 2> alloc, exact;
  const std::array<double, 2> nus{0.4438, 0.5562};
  for (int k = 0; k < 2; ++k) {
    const OptimizerResult opt = optimize(b, nus[k]);
    alloc[k] = make_implementable(b, opt.design, n, nus[k]).design.counts;
    exact[k] = exhaustive_linear(b, n, nus[k]).counts;
  }
  const bool ok = alloc[0] == alloc[1];
  return {ok, fmt("nu=.4438 -> %s, nu=.5562 -> %s; exhaustive integer optima: %s vs %s", counts_string(alloc[0]).c_str(),
                  counts_string(alloc[1]).c_str(), counts_string(exact[0]).c_str(), counts_string(exact[1]).c_str())};
}

Outcome dependence_bound() {
  const auto t0 = Clock::now();
  const ModelBasis b = line_basis(1);
  const long n = 20;
  const double nu = 0.5;
  const ImplementableDesign d = make_implementable(b, optimize(b, nu).design, n, nu).design;
  Matrix X(static_cast<std::size_t>(n), b.params());
  std::size_t row = 0;
  for (std::size_t i = 0; i < d.counts.size(); ++i)
    for (long r = 0; r < d.counts[i]; ++r, ++row)
      for (std::size_t j = 0; j < b.params(); ++j) X(row, j) = b.F(i, j);

  const double alpha_sq = 1.0, rho_max = 0.5;
  const double eta_sq = eta_squared(alpha_sq, n, rho_max);
  const double bound = ls_predictor_variance(b.A, X, equicorrelation_matrix(n, eta_sq, 0.0));
  double worst_ratio = 0.0, route_gap = 0.0;
  for (double rho : linear_grid(0.0, rho_max, 11)) {
    const double v = ls_equicorrelated_variance(b.A, X, alpha_sq, rho);
    const double direct = ls_predictor_variance(b.A, X, equicorrelation_matrix(n, alpha_sq, rho));
    route_gap = std::max(route_gap, std::abs(v - direct) / direct);
    worst_ratio = std::max(worst_ratio, v / bound);
  }
  const double top = sym_eigen(equicorrelation_matrix(n, alpha_sq, rho_max)).max();
  const double tight = std::abs(top - eta_sq);
  const double secs = seconds_since(t0);
  const bool ok = worst_ratio <= 1.0 && tight < 1e-9 && route_gap < 1e-10 && secs < 1.0;
  return {ok, fmt("eta^2=%.2f max variance/bound=%.4f |ch_max C(rho_max) - eta^2|=%.1e closed form vs matrix %.1e "
                  "time=%.3fs",
                  eta_sq, worst_ratio, tight, route_gap, secs)};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.insert(std::stoi(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, expected;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--only") {
      only = parse_list(argv[i + 1]);
    } else if (flag == "--expect-fail") {
      expected = parse_list(argv[i + 1]);
    } else {
      std::fprintf(stderr, "unknown option %s\n", argv[i]);
      return 2;
    }
  }

  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Criterion all[] = {
      {1, "I-optimal linear design", linear_i_optimal},
      {2, "I-optimal cubic design", cubic_i_optimal},
      {3, "nu-difference constants", nu_constants},
      {4, "efficiency factor endpoints", efficiency_endpoints},
      {5, "worst-case IMSE equals J/n", worst_case_oracle},
      {6, "first-order M-estimator behaviour", first_order_mc},
      {7, "rounding quality", rounding_quality},
      {8, "same allocation at nu_m and nu_ls", estimator_insensitivity},
      {9, "equicorrelated dependence bound", dependence_bound},
  };

  std::set<int> failed;
  std::size_t ran = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    ++ran;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) failed.insert(c.id);
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::string expected_here;
  bool as_expected = true;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const bool exp = expected.count(c.id) > 0;
    if (exp) expected_here += " " + std::to_string(c.id);
    as_expected = as_expected && exp == (failed.count(c.id) > 0);
  }
  std::printf("%zu passed, %zu failed", ran - failed.size(), failed.size());
  if (!expected_here.empty()) std::printf(" (expected to fail:%s)", expected_here.c_str());
  std::printf("\n");
  return as_expected ? 0 : 1;
}
