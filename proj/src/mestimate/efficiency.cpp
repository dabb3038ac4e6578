#include "mmrd/mestimate/efficiency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mmrd/errors.hpp"
#include "mmrd/mestimate/fit.hpp"

namespace mmrd {

double huber_efficiency_excess(double c) {
  require(!(c < 0.0), "tuning constant must be non-negative");
  constexpr double pi = std::numbers::pi;
  if (std::isinf(c)) return 0.0;
  if (c < 1e-4) return pi / 2.0 - 1.0 - std::sqrt(2.0 * pi) / 3.0 * c + pi / 6.0 * c * c;
  const double tail = 0.5 * std::erfc(c / std::numbers::sqrt2);  // Φ(-c)
  const double den = std::erf(c / std::numbers::sqrt2);            // 1 - 2Φ(-c)
  if (c < 1.0) {
    // Numerator as [erf(c/√2) - 2cφ(c)] + 2c²Φ(-c); the bracket cancels for
    // small c and is summed as a series.
    double head = 0.0;
    double term = c;  // (-1)^k c^(2k+1) / (2^k k!)
    for (int k = 1; k < 40; ++k) {
      term *= -c * c / (2.0 * k);
      const double add = -term * (2.0 * k) / (2.0 * k + 1.0);
      head += add;
      if (std::abs(add) < 1e-18 * std::abs(head)) break;
    }
    head *= 2.0 * normal_pdf(0.0);
    return (head + 2.0 * c * c * tail) / (den * den) - 1.0;
  }
  // num - den² = 2φ(c)·[(c² + 1)·Φ(-c)/φ(c) - c] - 4Φ(-c)², kept away from 1 + tiny.
  const double pdf = normal_pdf(c);
  if (pdf == 0.0) return 0.0;
  const double gap = 2.0 * pdf * ((c * c + 1.0) * (tail / pdf) - c) - 4.0 * tail * tail;
  return gap / (den * den);
}

double huber_efficiency_factor(double c) { return 1.0 + huber_efficiency_excess(c); }

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

// ∫_0^∞ g(u) du, split at `kink` when positive.
double half_line(const std::function<double(double)>& g, double kink) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (kink > 0.0) return GK::integrate(g, 0.0, kink, 15, 1e-13) + GK::integrate(g, kink, inf, 15, 1e-13);
  return GK::integrate(g, 0.0, inf, 15, 1e-13);
}

double ratio(double e_psi2, double e_dpsi, double scale) {
  if (!(e_dpsi > 1e-12)) fail(ErrorKind::DegenerateDenominator, "E[psi'] vanishes");
  return scale * scale * e_psi2 / (e_dpsi * e_dpsi);
}

}  // namespace

double sigma_m_squared_normal(const PsiSpec& psi, double sigma) {
  require(sigma > 0.0, "sigma must be positive");
  if (psi.family == PsiFamily::Identity) return sigma * sigma;
  if (psi.family == PsiFamily::Huber) return sigma * sigma * huber_efficiency_factor(psi.tuning);
  return sigma_m_squared_density(psi, [sigma](double x) { return normal_pdf(x / sigma) / sigma; }, sigma);
}

double sigma_m_squared_density(const PsiSpec& psi, const std::function<double(double)>& pdf, double scale) {
  require(scale > 0.0, "scale must be positive");
  // u = ε/scale has density scale·pdf(scale·u); integrands are even.
  auto density = [&](double u) { return scale * pdf(scale * u); };
  const double kink = psi.kink();
  const double e_psi2 = 2.0 * half_line([&](double u) { const double v = psi.psi(u); return v * v * density(u); }, kink);
  const double e_dpsi = 2.0 * half_line([&](double u) { return psi.dpsi(u) * density(u); }, kink);
  return ratio(e_psi2, e_dpsi, scale);
}

double sigma_m_squared_sample(const PsiSpec& psi, std::span<const double> errors, double scale) {
  require(!errors.empty(), "empty error sample");
  if (scale <= 0.0) {
    std::vector<double> a(errors.begin(), errors.end());
    for (double& v : a) v = std::abs(v);
    const std::size_t mid = a.size() / 2;
    std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid), a.end());
    double med = a[mid];
    if (a.size() % 2 == 0) med = 0.5 * (med + *std::max_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid)));
    scale = med / mad_constant();
  }
  if (psi.family == PsiFamily::Identity) {
    double s = 0.0;
    for (double e : errors) s += e * e;
    return s / static_cast<double>(errors.size());
  }
  require(scale > 0.0, "error sample has zero scale");
  double s2 = 0.0, s1 = 0.0;
  for (double e : errors) {
    const double u = e / scale;
    const double v = psi.psi(u);
    s2 += v * v;
    s1 += psi.dpsi(u);
  }
  const double m = static_cast<double>(errors.size());
  return ratio(s2 / m, s1 / m, scale);
}

NuCalculus nu_calculus_from_factor(double G, double gamma_sq, double c) {
  require(gamma_sq > 0.0, "gamma^2 must be positive");
  require(G >= 1.0 - 1e-12, "variance factor below one");
  NuCalculus r;
  r.c = c;
  r.gamma_sq = gamma_sq;
  r.G = G;
  r.nu_ls = 1.0 / (gamma_sq + 1.0);
  r.nu_m = 1.0 / (gamma_sq * G + 1.0);
  r.diff = r.nu_ls - r.nu_m;
  return r;
}

NuCalculus nu_calculus(double c, double gamma_sq) {
  return nu_calculus_from_factor(huber_efficiency_factor(c), gamma_sq, c);
}

NuTable nu_analysis(std::span<const double> c_grid, std::span<const double> gamma_sq_grid) {
  require(!c_grid.empty() && !gamma_sq_grid.empty(), "grids must be non-empty");
  NuTable t;
  t.rows.reserve(c_grid.size() * gamma_sq_grid.size());
  for (double c : c_grid) {
    require(c >= 0.0, "c must be non-negative");
    const double G = huber_efficiency_factor(c);
    for (double g : gamma_sq_grid) {
      t.rows.push_back(nu_calculus_from_factor(G, g, c));
      if (t.rows.back().diff > t.rows[t.argmax].diff) t.argmax = t.rows.size() - 1;
    }
  }

  // Golden section in log γ² between the grid neighbours of the maximum.
  const std::size_t gi = t.argmax % gamma_sq_grid.size();
  const double c = t.rows[t.argmax].c;
  const double G = t.rows[t.argmax].G;
  double lo = std::log(gamma_sq_grid[gi > 0 ? gi - 1 : gi]);
  double hi = std::log(gamma_sq_grid[gi + 1 < gamma_sq_grid.size() ? gi + 1 : gi]);
  if (lo > hi) std::swap(lo, hi);
  auto h = [&](double lg) { return nu_calculus_from_factor(G, std::exp(lg), c).diff; };
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
  double fa = h(a), fb = h(b);
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + phi * (hi - lo);
      fb = h(b);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - phi * (hi - lo);
      fa = h(a);
    }
  }
  t.refined = nu_calculus_from_factor(G, std::exp(0.5 * (lo + hi)), c);
  if (t.refined.diff < t.rows[t.argmax].diff) t.refined = t.rows[t.argmax];
  return t;
}

double max_nu_difference() {
  const double r = std::sqrt(std::numbers::pi / 2.0);
  return (r - 1.0) / (r + 1.0);
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  require(lo > 0.0 && hi >= lo && n >= 1, "invalid log grid");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) / static_cast<double>(n - 1));
  if (n > 1) {
    g.front() = lo;
    g.back() = hi;
  }
  return g;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  require(hi >= lo && n >= 1, "invalid grid");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

}  // namespace mmrd
