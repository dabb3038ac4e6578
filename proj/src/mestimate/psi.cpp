#include "mmrd/mestimate/psi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmrd/errors.hpp"

namespace mmrd {

PsiSpec PsiSpec::huber(double c) {
  require(c > 0.0 && std::isfinite(c), "huber tuning constant must be positive");
  return {PsiFamily::Huber, c};
}

PsiSpec PsiSpec::smoothed_huber(double c) {
  require(c > 0.0 && std::isfinite(c), "smoothed_huber tuning constant must be positive");
  return {PsiFamily::SmoothedHuber, c};
}

PsiSpec PsiSpec::tanh_sign(double s) {
  require(s > 0.0 && std::isfinite(s), "tanh_sign scale must be positive");
  return {PsiFamily::TanhSign, s};
}

PsiSpec PsiSpec::parse(const std::string& family, double tuning) {
  if (family == "identity" || family == "ls") return identity();
  if (family == "huber") return huber(tuning);
  if (family == "smoothed_huber") return smoothed_huber(tuning);
  if (family == "tanh_sign") return tanh_sign(tuning);
  fail(ErrorKind::InvalidInput, "unknown psi family '" + family + "'");
}

std::string PsiSpec::name() const {
  switch (family) {
    case PsiFamily::Identity: return "identity";
    case PsiFamily::Huber: return "huber";
    case PsiFamily::SmoothedHuber: return "smoothed_huber";
    case PsiFamily::TanhSign: return "tanh_sign";
  }
  return "identity";
}

double PsiSpec::psi(double x) const {
  switch (family) {
    case PsiFamily::Identity: return x;
    case PsiFamily::Huber: return std::clamp(x, -tuning, tuning);
    case PsiFamily::SmoothedHuber: {
      const double u = x / tuning;
      return x / std::sqrt(1.0 + u * u);
    }
    case PsiFamily::TanhSign: return std::tanh(x / tuning);
  }
  return x;
}

double PsiSpec::dpsi(double x) const {
  switch (family) {
    case PsiFamily::Identity: return 1.0;
    case PsiFamily::Huber: return std::abs(x) <= tuning ? 1.0 : 0.0;
    case PsiFamily::SmoothedHuber: {
      const double u = x / tuning;
      return std::pow(1.0 + u * u, -1.5);
    }
    case PsiFamily::TanhSign: {
      const double c = std::cosh(x / tuning);
      return 1.0 / (tuning * c * c);
    }
  }
  return 1.0;
}

double PsiSpec::d2psi(double x) const {
  switch (family) {
    case PsiFamily::Identity:
    case PsiFamily::Huber: return 0.0;
    case PsiFamily::SmoothedHuber: {
      const double u = x / tuning;
      return -3.0 * x / (tuning * tuning) * std::pow(1.0 + u * u, -2.5);
    }
    case PsiFamily::TanhSign: {
      const double c = std::cosh(x / tuning);
      return -2.0 * std::tanh(x / tuning) / (tuning * tuning * c * c);
    }
  }
  return 0.0;
}

double PsiSpec::weight(double x) const {
  if (std::abs(x) < 1e-12) return dpsi(0.0);
  return psi(x) / x;
}

PsiDiagnostics psi_diagnostics(const PsiSpec& psi, double sigma, double range, int points) {
  require(sigma > 0.0 && range > 0.0 && points >= 3, "invalid diagnostic grid");
  PsiDiagnostics d;
  d.odd = true;
  d.monotone = true;
  d.twice_differentiable = psi.twice_differentiable();
  const double h = 1e-4 * sigma;
  double prev = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < points; ++k) {
    const double x = -range + 2.0 * range * k / (points - 1);
    const double u = x / sigma;
    const double v = psi.psi(u);
    if (psi.psi(-u) != -v) d.odd = false;
    if (v < prev) d.monotone = false;
    prev = v;
    d.m1 = std::max(d.m1, psi.dpsi(u) / sigma);
    d.m2 = std::max(d.m2, std::abs(psi.d2psi(u)) / (sigma * sigma));
    if (d.twice_differentiable) {
      const double fd = (psi.dpsi((x + h) / sigma) - psi.dpsi((x - h) / sigma)) / (2.0 * h * sigma);
      d.max_second_derivative_error = std::max(d.max_second_derivative_error, std::abs(fd - psi.d2psi(u) / (sigma * sigma)));
    }
  }
  return d;
}

}  // namespace mmrd
