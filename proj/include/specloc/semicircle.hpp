#pragma once

// Closed-form semicircle quantities: density, tail mass, Stieltjes
// transform and strip integrals of its imaginary part.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "specloc/errors.hpp"
#include "specloc/quadrature.hpp"

namespace specloc {

/// Semicircle density (1/2pi) sqrt(4 - x^2) on [-2, 2].
inline double rho_sc(double x) noexcept {
  if (std::abs(x) >= 2.0) return 0.0;
  return std::sqrt(4.0 - x * x) / (2.0 * std::numbers::pi);
}

namespace detail {

// Antiderivative of rho_sc on [-2, 2].
inline double sc_antiderivative(double x) noexcept {
  x = std::clamp(x, -2.0, 2.0);
  return (0.5 * x * std::sqrt(std::max(0.0, 4.0 - x * x)) + 2.0 * std::asin(x / 2.0)) / (2.0 * std::numbers::pi);
}

}  // namespace detail

/// Mass of rho_sc on [2 - u, 2], u in [0, 4].
inline double sc_tail_mass(double u) {
  if (!(u >= 0.0 && u <= 4.0)) throw DomainError("sc_tail_mass: u must lie in [0, 4]");
  return std::clamp(detail::sc_antiderivative(2.0) - detail::sc_antiderivative(2.0 - u), 0.0, 1.0);
}

/// Semicircle CDF.
inline double sc_cdf(double x) noexcept {
  if (x <= -2.0) return 0.0;
  if (x >= 2.0) return 1.0;
  return std::clamp(detail::sc_antiderivative(x) + 0.5, 0.0, 1.0);
}

/// Lower and upper bounds on sc_tail_mass(u) valid for u <= 4.
inline double sc_tail_lower_bound(double u) noexcept {
  return 2.0 * std::sqrt(1.0 - u / 4.0) / (3.0 * std::numbers::pi) * std::pow(u, 1.5);
}
inline double sc_tail_upper_bound(double u) noexcept { return 2.0 / (3.0 * std::numbers::pi) * std::pow(u, 1.5); }

/// Stieltjes transform of the semicircle law, the root of m^2 + z m + 1 = 0
/// with Im m > 0 for Im z > 0, conjugate-symmetric below the axis, and the
/// root with |m| < 1 on the real axis outside [-2, 2].
inline std::complex<double> msc(std::complex<double> z) {
  if (z.imag() == 0.0 && std::abs(z.real()) <= 2.0) {
    throw DomainError("msc: z lies on the cut [-2, 2]");
  }
  // Principal sqrt has its cut on the negative real axis of z^2 - 4.
  const std::complex<double> s = std::sqrt(z * z - 4.0);
  const std::complex<double> r1 = 0.5 * (-z + s);
  const std::complex<double> r2 = 0.5 * (-z - s);
  // The roots multiply to 1: invert the larger one to avoid cancellation.
  std::complex<double> m = 1.0 / (std::abs(r1) >= std::abs(r2) ? r1 : r2);
  if (z.imag() > 0.0 && m.imag() < 0.0) m = 1.0 / m;
  if (z.imag() < 0.0 && m.imag() > 0.0) m = 1.0 / m;
  if (z.imag() == 0.0) m.imag(0.0);
  return m;
}

struct StripIntegralResult {
  double value = 0.0;  // (1/pi) Im int_a^b msc(lambda + i delta) d lambda
  double a = 0.0;
  double b = 0.0;
  double delta = 0.0;
  double quad_error_estimate = 0.0;
};

inline constexpr double kQuadratureErrorBudget = 1e-3;

/// Composite Gauss-Legendre with at least 8 nodes per delta-width; the
/// error estimate compares against the rule with twice as many panels.
inline StripIntegralResult msc_strip_integral(double a, double b, double delta, std::size_t quad_points = 64) {
  if (!(delta > 0.0)) throw InvalidParams("msc_strip_integral: delta must be positive");
  if (a > b) throw InvalidParams("msc_strip_integral: need a <= b");
  if (quad_points < 1) throw InvalidParams("msc_strip_integral: need quad_points >= 1");
  StripIntegralResult out{0.0, a, b, delta, 0.0};
  if (a == b) return out;
  const auto rule = gauss_legendre(quad_points);
  const std::size_t panels = panels_for_density(b - a, delta, quad_points);
  auto integrate = [&](std::size_t p) {
    const auto comp = composite_rule(rule, a, b, p);
    double acc = 0.0;
    for (std::size_t i = 0; i < comp.nodes.size(); ++i) {
      acc += comp.weights[i] * msc({comp.nodes[i], delta}).imag();
    }
    return acc / std::numbers::pi;
  };
  const double coarse = integrate(panels);
  const double fine = integrate(2 * panels);
  out.value = fine;
  out.quad_error_estimate = std::abs(fine - coarse);
  if (out.quad_error_estimate > kQuadratureErrorBudget) {
    throw QuadratureBudget("msc_strip_integral: error estimate exceeds budget", out.quad_error_estimate);
  }
  return out;
}

/// Bracket for (1/pi) Im int_{2-2eps}^{c} msc(lambda + i delta) d lambda,
/// valid for 0 < delta < eps < 1 and c >= 2 + eps.
struct StripBracket {
  double lower;
  double upper;
};

inline StripBracket msc_strip_bracket(double eps, double delta) noexcept {
  return {(1.0 - 2.0 * delta / eps) * std::sqrt(3.0) / (3.0 * std::numbers::pi) * std::pow(eps, 1.5),
          2.0 * std::pow(eps, 1.5) + delta / eps};
}

}  // namespace specloc
