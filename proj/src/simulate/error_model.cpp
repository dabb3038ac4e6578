#include "mmrd/simulate/error_model.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/roots.hpp>

#include "mmrd/errors.hpp"
#include "mmrd/mestimate/efficiency.hpp"
#include "mmrd/mestimate/fit.hpp"

namespace mmrd {

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng make_stream(std::uint64_t seed, std::uint64_t stream) { return Rng(split_seed(seed, stream)); }

ErrorModel ErrorModel::normal(double sigma, std::uint64_t seed) {
  require(sigma > 0.0, "sigma must be positive");
  ErrorModel e;
  e.sigma = sigma;
  e.seed = seed;
  return e;
}

ErrorModel ErrorModel::contaminated_normal(double sigma, double frac, double inflate, std::uint64_t seed) {
  require(sigma > 0.0, "sigma must be positive");
  require(frac >= 0.0 && frac < 1.0, "contamination fraction must be in [0, 1)");
  require(inflate >= 1.0, "inflation factor must be at least 1");
  ErrorModel e = normal(sigma, seed);
  e.family = ErrorFamily::ContaminatedNormal;
  e.frac = frac;
  e.inflate = inflate;
  return e;
}

ErrorModel ErrorModel::student_t(double df, double scale, std::uint64_t seed) {
  require(df > 0.0, "degrees of freedom must be positive");
  ErrorModel e = normal(scale, seed);
  e.family = ErrorFamily::StudentT;
  e.df = df;
  return e;
}

ErrorModel ErrorModel::equicorrelated(double sigma, double rho, std::uint64_t seed) {
  require(rho >= 0.0 && rho < 1.0, "correlation must be in [0, 1)");
  ErrorModel e = normal(sigma, seed);
  e.family = ErrorFamily::Equicorrelated;
  e.rho = rho;
  return e;
}

std::string ErrorModel::name() const {
  switch (family) {
    case ErrorFamily::Normal: return "normal";
    case ErrorFamily::ContaminatedNormal: return "contaminated_normal";
    case ErrorFamily::StudentT: return "student_t";
    case ErrorFamily::Equicorrelated: return "equicorrelated";
  }
  return "unknown";
}

void ErrorModel::draw(Rng& rng, std::span<double> out) const {
  std::normal_distribution<double> z;
  switch (family) {
    case ErrorFamily::Normal:
      for (double& e : out) e = sigma * z(rng);
      break;
    case ErrorFamily::ContaminatedNormal: {
      std::bernoulli_distribution wild(frac);
      for (double& e : out) {
        const bool w = wild(rng);
        e = sigma * (w ? inflate : 1.0) * z(rng);
      }
      break;
    }
    case ErrorFamily::StudentT: {
      std::student_t_distribution<double> t(df);
      for (double& e : out) e = sigma * t(rng);
      break;
    }
    case ErrorFamily::Equicorrelated: {
      const double common = std::sqrt(rho) * z(rng);
      const double own = std::sqrt(1.0 - rho);
      for (double& e : out) e = sigma * (own * z(rng) + common);
      break;
    }
  }
}

double ErrorModel::pdf(double x) const {
  switch (family) {
    case ErrorFamily::Normal:
    case ErrorFamily::Equicorrelated:
      return normal_pdf(x / sigma) / sigma;
    case ErrorFamily::ContaminatedNormal: {
      const double wide = sigma * inflate;
      return (1.0 - frac) * normal_pdf(x / sigma) / sigma + frac * normal_pdf(x / wide) / wide;
    }
    case ErrorFamily::StudentT:
      return boost::math::pdf(boost::math::students_t_distribution<double>(df), x / sigma) / sigma;
  }
  return 0.0;
}

double ErrorModel::variance() const {
  switch (family) {
    case ErrorFamily::Normal:
    case ErrorFamily::Equicorrelated:
      return sigma * sigma;
    case ErrorFamily::ContaminatedNormal:
      return sigma * sigma * (1.0 - frac + frac * inflate * inflate);
    case ErrorFamily::StudentT:
      return df > 2.0 ? sigma * sigma * df / (df - 2.0) : std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

double ErrorModel::mad_scale() const {
  switch (family) {
    case ErrorFamily::Normal:
    case ErrorFamily::Equicorrelated:
      return sigma;
    case ErrorFamily::StudentT:
      return sigma * boost::math::quantile(boost::math::students_t_distribution<double>(df), 0.75) / mad_constant();
    case ErrorFamily::ContaminatedNormal: {
      // P(|ε| ≤ m) = 1/2, bracketed by the two component medians.
      auto f = [this](double m) {
        const double a = 2.0 * normal_cdf(m / sigma) - 1.0;
        const double b = 2.0 * normal_cdf(m / (sigma * inflate)) - 1.0;
        return (1.0 - frac) * a + frac * b - 0.5;
      };
      const double lo = sigma * mad_constant();
      const double hi = sigma * inflate * mad_constant();
      if (hi - lo < 1e-14 * hi) return sigma;
      auto tol = boost::math::tools::eps_tolerance<double>(50);
      std::uintmax_t iters = 200;
      const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
      return 0.5 * (a + b) / mad_constant();
    }
  }
  return sigma;
}

double sigma_m_squared(const PsiSpec& psi, const ErrorModel& err) {
  if (psi.family == PsiFamily::Identity) {
    const double v = err.variance();
    if (!std::isfinite(v)) fail(ErrorKind::DegenerateDenominator, "error variance is infinite; least squares has no asymptotic variance");
    return v;
  }
  if (err.family == ErrorFamily::Normal || err.family == ErrorFamily::Equicorrelated)
    return sigma_m_squared_normal(psi, err.sigma);
  return sigma_m_squared_density(psi, [&err](double x) { return err.pdf(x); }, err.mad_scale());
}

}  // namespace mmrd
