#include "mmrd/simulate/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "mmrd/errors.hpp"
#include "mmrd/loss/loss.hpp"

namespace mmrd {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    comp_ += (sum_ - t) + x;
  else
    comp_ += (x - t) + sum_;
  sum_ = t;
}

double ks_distance_normal(Vector sample) {
  require(!sample.empty(), "empty sample");
  std::sort(sample.begin(), sample.end());
  const double m = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = normal_cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / m - F, F - static_cast<double>(i) / m});
  }
  return d;
}

namespace {

struct ReplicateOutcome {
  bool ok = false;
  Vector delta;  // θ̂ - θ₀
};

}  // namespace

MCReport run_mc(const ModelBasis& basis, const ImplementableDesign& design, const PsiSpec& psi,
                const ErrorModel& err, const Disturbance& tau, const MCConfig& cfg) {
  require(cfg.reps >= 100, "at least 100 replicates are required");
  require(design.counts.size() == basis.points(), "design does not match the design space");
  require(tau.tau().size() == basis.points(), "disturbance does not match the design space");
  const std::size_t p = basis.params();
  const std::size_t N = basis.points();

  MCReport rep;
  rep.requested = cfg.reps;
  rep.n = design.n;
  rep.seed = err.seed;
  rep.theta0 = cfg.theta0.value_or(Vector(p, 1.0));
  require(rep.theta0.size() == p, "theta0 has the wrong length");

  const Matrix X = replicate_rows(basis.F, design.counts);
  const std::size_t n = X.rows();
  Vector mean(n);
  {
    std::size_t row = 0;
    const Vector f_theta = basis.F * rep.theta0;
    for (std::size_t i = 0; i < N; ++i)
      for (long r = 0; r < design.counts[i]; ++r) mean[row++] = f_theta[i] + tau.tau()[i];
  }

  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(cfg.reps));
  std::atomic<long> next{0};
  auto worker = [&] {
    Observations obs{X, Vector(n)};
    FitWorkspace ws;
    Vector eps(n);
    for (long r = next++; r < cfg.reps; r = next++) {
      Rng rng = make_stream(err.seed, static_cast<std::uint64_t>(r));
      err.draw(rng, eps);
      for (std::size_t j = 0; j < n; ++j) obs.y[j] = mean[j] + eps[j];
      ReplicateOutcome& out = outcomes[static_cast<std::size_t>(r)];
      try {
        FitResult res = fit(obs, psi, cfg.fit, ws);
        if (!res.converged) continue;
        out.delta = std::move(res.theta_hat);
        for (std::size_t k = 0; k < p; ++k) out.delta[k] -= rep.theta0[k];
        out.ok = true;
      } catch (const Error& e) {
        if (!e.is_numerical()) throw;
      }
    }
  };
  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<long>(threads, cfg.reps));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          worker();
        } catch (...) {
          errors[t] = std::current_exception();
          next = cfg.reps;
        }
      });
    pool.clear();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // Index-ordered reduction keeps the report independent of scheduling.
  std::vector<const Vector*> good;
  good.reserve(outcomes.size());
  for (const auto& o : outcomes)
    if (o.ok) good.push_back(&o.delta);
  rep.replicates = static_cast<long>(good.size());
  rep.failures = rep.requested - rep.replicates;
  rep.convergence_rate = static_cast<double>(rep.replicates) / static_cast<double>(rep.requested);
  if (static_cast<double>(rep.failures) > cfg.max_failure_rate * static_cast<double>(rep.requested))
    fail(ErrorKind::NoConvergence, "too many Monte Carlo replicates failed to converge (" +
                                       std::to_string(rep.failures) + " of " + std::to_string(rep.requested) + ")");
  require(rep.replicates >= 2, "too few converged replicates");
  const double m = static_cast<double>(rep.replicates);

  rep.empirical_bias.assign(p, 0.0);
  for (std::size_t k = 0; k < p; ++k) {
    CompensatedSum s;
    for (const Vector* d : good) s.add((*d)[k]);
    rep.empirical_bias[k] = s.value() / m;
  }
  rep.empirical_cov = Matrix(p, p);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a; b < p; ++b) {
      CompensatedSum s;
      for (const Vector* d : good) s.add(((*d)[a] - rep.empirical_bias[a]) * ((*d)[b] - rep.empirical_bias[b]));
      rep.empirical_cov(a, b) = rep.empirical_cov(b, a) = s.value() / (m - 1.0);
    }
  rep.bias_std_err.resize(p);
  for (std::size_t k = 0; k < p; ++k) rep.bias_std_err[k] = std::sqrt(rep.empirical_cov(k, k) / m);

  CompensatedSum loss_sum;
  Vector losses;
  losses.reserve(good.size());
  for (const Vector* d : good) {
    const Vector Ad = basis.A * *d;
    losses.push_back(dot(*d, Ad) + tau.sum_of_squares());
    loss_sum.add(losses.back());
  }
  rep.empirical_imse = loss_sum.value() / m;
  CompensatedSum loss_var;
  for (double l : losses) loss_var.add((l - rep.empirical_imse) * (l - rep.empirical_imse));
  rep.imse_std_err = std::sqrt(loss_var.value() / (m - 1.0) / m);

  // Predictions.
  const Design xi = design.as_design();
  const MomentSet ms = moments(basis, xi);
  rep.sigma_m2 = sigma_m_squared(psi, err);
  const double nn = static_cast<double>(design.n);
  const Matrix M0_inv = spd_inverse(ms.M0);
  rep.predicted_bias = M0_inv * bias_vector(basis, xi, tau.tau());
  rep.predicted_cov = (rep.sigma_m2 / nn) * M0_inv;
  rep.cov_relative_gap = frobenius_norm(rep.empirical_cov - rep.predicted_cov) / frobenius_norm(rep.predicted_cov);
  rep.bias_z.resize(p);
  for (std::size_t k = 0; k < p; ++k)
    rep.bias_z[k] = (rep.empirical_bias[k] - rep.predicted_bias[k]) / rep.bias_std_err[k];
  rep.predicted_imse = imse_exact(basis, ms, tau, rep.sigma_m2);
  if (tau.kappa() > 0.0) {
    const LossReport lr = evaluate(ms, LossParams::from_raw(tau.kappa(), rep.sigma_m2));
    rep.j_over_n = *lr.j_value / nn;
  }

  const Matrix root = sym_sqrt(ms.M0);
  const double scale = std::sqrt(nn / rep.sigma_m2);
  std::vector<Vector> comps(p, Vector(good.size()));
  Vector centred(p);
  for (std::size_t r = 0; r < good.size(); ++r) {
    for (std::size_t k = 0; k < p; ++k) centred[k] = (*good[r])[k] - rep.predicted_bias[k];
    const Vector z = root * centred;
    for (std::size_t k = 0; k < p; ++k) comps[k][r] = scale * z[k];
  }
  rep.ks_distance.resize(p);
  for (std::size_t k = 0; k < p; ++k) rep.ks_distance[k] = ks_distance_normal(std::move(comps[k]));
  rep.ks_threshold = 1.63 / std::sqrt(m);
  return rep;
}

}  // namespace mmrd
