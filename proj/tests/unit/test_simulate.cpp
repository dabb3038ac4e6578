#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "mmrd/errors.hpp"
#include "mmrd/loss/loss.hpp"
#include "mmrd/mestimate/efficiency.hpp"
#include "mmrd/simulate/dependence.hpp"
#include "mmrd/simulate/monte_carlo.hpp"

using namespace mmrd;

namespace {

double sample_mad_scale(Vector v) {
  for (double& x : v) x = std::abs(x);
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2] / mad_constant();
}

Vector draw_many(const ErrorModel& e, std::size_t n, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  Vector v(n);
  e.draw(rng, v);
  return v;
}

bool same_report(const MCReport& a, const MCReport& b) {
  return a.empirical_bias == b.empirical_bias && a.empirical_cov.values().size() == b.empirical_cov.values().size() &&
         std::equal(a.empirical_cov.values().begin(), a.empirical_cov.values().end(), b.empirical_cov.values().begin()) &&
         a.empirical_imse == b.empirical_imse && a.ks_distance == b.ks_distance && a.replicates == b.replicates;
}

}  // namespace

TEST_CASE("splittable streams") {
  CHECK(split_seed(1, 0) == split_seed(1, 0));
  CHECK(split_seed(1, 0) != split_seed(1, 1));
  CHECK(split_seed(1, 0) != split_seed(2, 0));
  Rng a = make_stream(9, 4), b = make_stream(9, 4);
  for (int i = 0; i < 10; ++i) CHECK(a() == b());
}

TEST_CASE("error models") {
  SUBCASE("marginal moments and scale") {
    const ErrorModel models[] = {ErrorModel::normal(2.0), ErrorModel::contaminated_normal(1.0, 0.1, 5.0),
                                 ErrorModel::student_t(5.0, 1.5), ErrorModel::equicorrelated(1.0, 0.0)};
    for (const ErrorModel& m : models) {
      CAPTURE(m.name());
      const Vector v = draw_many(m, 400000, 71);
      double mean = 0.0, var = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      for (double x : v) var += (x - mean) * (x - mean);
      var /= static_cast<double>(v.size() - 1);
      CHECK(std::abs(mean) < 5.0 * std::sqrt(m.variance() / v.size()));
      CHECK(var == doctest::Approx(m.variance()).epsilon(0.03));
      CHECK(sample_mad_scale(v) == doctest::Approx(m.mad_scale()).epsilon(0.01));
    }
  }
  SUBCASE("equicorrelated samples share a common component") {
    const ErrorModel m = ErrorModel::equicorrelated(1.5, 0.3);
    double s01 = 0.0, s00 = 0.0;
    const int reps = 100000;
    Vector e(2);
    for (int r = 0; r < reps; ++r) {
      Rng rng = make_stream(5, static_cast<std::uint64_t>(r));
      m.draw(rng, e);
      s01 += e[0] * e[1];
      s00 += e[0] * e[0];
    }
    CHECK(s01 / s00 == doctest::Approx(0.3).epsilon(0.05));
  }
  SUBCASE("sigma_M^2 by family") {
    CHECK(sigma_m_squared(PsiSpec::identity(), ErrorModel::contaminated_normal(1.0, 0.1, 3.0)) == doctest::Approx(1.8));
    CHECK(sigma_m_squared(PsiSpec::huber(1.345), ErrorModel::normal(2.0)) == doctest::Approx(4.0 * huber_efficiency_factor(1.345)));
    const ErrorModel cn = ErrorModel::contaminated_normal(1.0, 0.1, 5.0);
    const Vector v = draw_many(cn, 400000, 73);
    CHECK(sigma_m_squared(PsiSpec::huber(1.345), cn) ==
          doctest::Approx(sigma_m_squared_sample(PsiSpec::huber(1.345), v)).epsilon(0.02));
    CHECK_THROWS_AS(sigma_m_squared(PsiSpec::identity(), ErrorModel::student_t(2.0, 1.0)), Error);
  }
  SUBCASE("invalid parameters") {
    CHECK_THROWS_AS(ErrorModel::equicorrelated(1.0, 1.0), Error);
    CHECK_THROWS_AS(ErrorModel::normal(0.0), Error);
    CHECK_THROWS_AS(ErrorModel::contaminated_normal(1.0, 0.2, 0.5), Error);
  }
}

TEST_CASE("statistics helpers") {
  CompensatedSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1.0);
  Vector q(200);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = normal_quantile((i + 0.5) / 200.0);
  CHECK(ks_distance_normal(q) == doctest::Approx(0.5 / 200.0).epsilon(1e-9));
}

TEST_CASE("run_mc") {
  const ModelBasis b = make_basis(DesignSpace::grid(-1, 1, 20), ModelSpec::polynomial(1));
  std::vector<long> counts(20, 0);
  counts[0] = 70;
  counts[3] = 30;
  counts[10] = 20;
  counts[19] = 80;
  const ImplementableDesign d(counts);

  SUBCASE("least squares under normal errors matches classical theory") {
    MCConfig cfg;
    cfg.reps = 2000;
    const MCReport r = run_mc(b, d, PsiSpec::identity(), ErrorModel::normal(1.0, 3), Disturbance::zero(b, 1.0, 200), cfg);
    CHECK(r.replicates == 2000);
    CHECK(r.convergence_rate == 1.0);
    CHECK(r.cov_relative_gap < 0.10);
    for (double z : r.bias_z) CHECK(std::abs(z) < 3.0);
    for (double k : r.ks_distance) CHECK(k < r.ks_threshold);
    const Matrix expected = (1.0 / 200.0) * spd_inverse(moments(b, d.as_design()).M0);
    CHECK(testing::max_abs_diff(r.predicted_cov, expected) < 1e-14);
    CHECK(testing::max_abs_diff(r.empirical_cov, r.empirical_cov.transpose()) == 0.0);
    CHECK(sym_eigen(r.empirical_cov).min() >= 0.0);
  }
  SUBCASE("determinism") {
    MCConfig cfg;
    cfg.reps = 100;
    cfg.threads = 1;
    const Disturbance tau = Disturbance::zero(b, 1.0, 200);
    const MCReport a = run_mc(b, d, PsiSpec::huber(1.345), ErrorModel::normal(1.0, 11), tau, cfg);
    const MCReport a2 = run_mc(b, d, PsiSpec::huber(1.345), ErrorModel::normal(1.0, 11), tau, cfg);
    cfg.threads = 4;
    const MCReport a4 = run_mc(b, d, PsiSpec::huber(1.345), ErrorModel::normal(1.0, 11), tau, cfg);
    const MCReport c = run_mc(b, d, PsiSpec::huber(1.345), ErrorModel::normal(1.0, 12), tau, cfg);
    CHECK(same_report(a, a2));
    CHECK(same_report(a, a4));
    CHECK_FALSE(same_report(a, c));
  }
  SUBCASE("worst-case contamination stays below J/n") {
    const MomentSet ms = moments(b, d.as_design());
    const Disturbance tau = worst_case_tau(b, ms, 2.0, 200).disturbance(b);
    MCConfig cfg;
    cfg.reps = 1000;
    const MCReport r = run_mc(b, d, PsiSpec::huber(1.345), ErrorModel::normal(1.0, 13), tau, cfg);
    REQUIRE(r.j_over_n.has_value());
    CHECK(r.empirical_imse <= *r.j_over_n + 3.0 * r.imse_std_err);
    CHECK(r.predicted_imse == doctest::Approx(*r.j_over_n).epsilon(1e-8));
  }
  SUBCASE("failure policy") {
    MCConfig cfg;
    cfg.reps = 100;
    cfg.fit.max_iters = 1;
    try {
      run_mc(b, d, PsiSpec::huber(1.345), ErrorModel::normal(1.0, 1), Disturbance::zero(b, 1.0, 200), cfg);
      FAIL("expected NoConvergence");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NoConvergence);
    }
    cfg.reps = 50;
    CHECK_THROWS_AS(run_mc(b, d, PsiSpec::identity(), ErrorModel::normal(1.0), Disturbance::zero(b, 1.0, 200), cfg), Error);
  }
}

TEST_CASE("equicorrelated dependence") {
  const ModelBasis b = make_basis(DesignSpace::grid(-1, 1, 10), ModelSpec::polynomial(1));
  const ImplementableDesign d(std::vector<long>{4, 1, 1, 1, 1, 1, 1, 2, 2, 6});  // n = 20
  const Matrix X = replicate_rows(b.F, d.counts);

  SUBCASE("equicorrelation spectrum") {
    const EigenResult e = sym_eigen(equicorrelation_matrix(20, 2.0, 0.3));
    CHECK(e.max() == doctest::Approx(2.0 * (1.0 + 19.0 * 0.3)));
    CHECK(e.min() == doctest::Approx(2.0 * 0.7));
    CHECK(eta_squared(2.0, 20, 0.5) == doctest::Approx(2.0 * 10.5));
    CHECK(eta_squared(2.0, 1, 0.5) == 2.0);
  }
  SUBCASE("closed form, Loewner monotonicity and the bound") {
    const double alpha = 1.7;
    const double bound = eta_squared(alpha, 20, 0.5) * trace(b.A * spd_inverse(weighted_gram(X)));
    double prev = -1.0;
    for (double rho = 0.0; rho <= 0.5 + 1e-12; rho += 0.05) {
      const double full = ls_predictor_variance(b.A, X, equicorrelation_matrix(20, alpha, rho));
      CHECK(full == doctest::Approx(ls_equicorrelated_variance(b.A, X, alpha, rho)).epsilon(1e-12));
      CHECK(full >= prev - 1e-12);
      CHECK(full <= bound);
      prev = full;
    }
  }
  SUBCASE("simulated sweep") {
    const Vector grid{0.0, 0.25, 0.5};
    const DependenceSweep sw = dependence_sweep(b, d, PsiSpec::identity(), grid, 1.0, 2000, 17);
    REQUIRE(sw.rows.size() == 3);
    CHECK(sw.within_bound);
    CHECK(sw.analytic_within_bound);
    CHECK(sw.tightness_gap < 1e-9);
    for (const auto& r : sw.rows) CHECK(std::abs(r.empirical_var - r.analytic_var) < 3.5 * r.std_err);
    // ρ = 0 is the independent case.
    CHECK(sw.rows[0].analytic_var == doctest::Approx(trace(b.A * spd_inverse(weighted_gram(X)))));

    const auto path = std::filesystem::temp_directory_path() / "mmrd_sweep_test.csv";
    write_sweep_csv(path, sw);
    std::ifstream f(path);
    std::string header;
    std::getline(f, header);
    CHECK(header == "rho,empirical_var,bound,std_err");
  }
  SUBCASE("one observation") {
    const ModelBasis one = make_basis(Matrix(1, 1, 1.0));
    const DependenceSweep sw =
        dependence_sweep(one, ImplementableDesign(std::vector<long>{1}), PsiSpec::identity(), Vector{0.0, 0.4}, 1.3, 100, 3);
    CHECK(sw.eta_sq == doctest::Approx(1.3));
    CHECK(sw.rows[1].bound == doctest::Approx(1.3));
  }
}
