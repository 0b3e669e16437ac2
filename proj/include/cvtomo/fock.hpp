#pragma once

// Fock-basis wavefunctions, measurement densities and quasiprobabilities for
// a single optical mode (hbar = 1, vacuum quadrature variance 1/2).

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cvtomo/types.hpp"

namespace cvtomo {

/// psi_n(x) = pi^{-1/4} (2^n n!)^{-1/2} exp(-x^2/2) H_n(x) for n = 0..n_max.
///
/// Uses the normalized three-term recurrence so neither H_n nor the Gaussian
/// factor is formed on its own (both overflow/underflow for |x| ~ 10).
inline VectorXd hermite_functions(double x, Index n_max) {
  if (!std::isfinite(x)) throw ValidationError("hermite_functions: x must be finite");
  if (n_max < 0) throw ValidationError("hermite_functions: n_max must be >= 0");
  VectorXd psi(n_max + 1);
  psi[0] = std::exp(-0.5 * x * x) / std::pow(std::numbers::pi, 0.25);
  if (n_max >= 1) psi[1] = std::numbers::sqrt2 * x * psi[0];
  for (Index n = 2; n <= n_max; ++n) {
    const double dn = static_cast<double>(n);
    psi[n] = std::sqrt(2.0 / dn) * x * psi[n - 1] - std::sqrt((dn - 1.0) / dn) * psi[n - 2];
  }
  return psi;
}

/// <n|x_theta> = e^{i n theta} psi_n(x).
inline Complex quadrature_overlap(Index n, double x, double theta) {
  if (n < 0) throw ValidationError("quadrature_overlap: n must be >= 0");
  return std::polar(1.0, static_cast<double>(n) * theta) * hermite_functions(x, n)[n];
}

/// Components <n|x_theta> for n < d.
inline VectorXcd quadrature_state(double x, double theta, Index d) {
  const VectorXd psi = hermite_functions(x, d - 1);
  VectorXcd v(d);
  for (Index n = 0; n < d; ++n) v[n] = std::polar(psi[n], static_cast<double>(n) * theta);
  return v;
}

/// Components <n|alpha> for n < d, built by c_n = c_{n-1} alpha / sqrt(n).
inline VectorXcd coherent_state(Complex alpha, Index d) {
  VectorXcd v(d);
  v[0] = std::exp(-0.5 * std::norm(alpha));
  for (Index n = 1; n < d; ++n) v[n] = v[n - 1] * alpha / std::sqrt(static_cast<double>(n));
  return v;
}

inline Complex coherent_overlap(Index n, Complex alpha) {
  if (n < 0) throw ValidationError("coherent_overlap: n must be >= 0");
  return coherent_state(alpha, n + 1)[n];
}

/// <v|rho|v>, real part.
inline double expectation(const MatrixXcd& rho, const VectorXcd& v) {
  return v.dot(rho * v).real();
}

/// Homodyne density f_theta(x) = <x_theta|rho|x_theta>, clamped at zero.
inline double homodyne_pdf(const DensityMatrix& rho, double theta, double x) {
  return std::max(0.0, expectation(rho.matrix(), quadrature_state(x, theta, rho.dim())));
}

/// Heterodyne density g(x, p) = <x+ip|rho|x+ip> / pi, the Husimi Q function.
inline double heterodyne_pdf(const DensityMatrix& rho, double x, double p) {
  const VectorXcd v = coherent_state(Complex(x, p), rho.dim());
  return std::max(0.0, expectation(rho.matrix(), v) / std::numbers::pi);
}

inline double husimi_q(const DensityMatrix& rho, Complex alpha) {
  return heterodyne_pdf(rho, alpha.real(), alpha.imag());
}

/// Wigner function W(x, p) normalized so that the integral over dx dp is 1.
///
/// Closed form for |m><n| (m >= n), with z = x - ip:
///   (-1)^n / pi * sqrt(n!/m!) (sqrt2 z)^{m-n} e^{-|z|^2} L_n^{(m-n)}(2|z|^2)
/// and the |n><m| term is its complex conjugate.
inline double wigner(const DensityMatrix& rho, double x, double p) {
  const Index d = rho.dim();
  const Complex z(x, -p);
  const double r2 = std::norm(z);
  const double y = 2.0 * r2;
  const Complex sz = std::numbers::sqrt2 * z;
  double total = 0.0;
  Complex zpow(1.0, 0.0);  // (sqrt2 z)^k / sqrt(k!) accumulated below
  std::vector<double> lag(static_cast<std::size_t>(d));
  for (Index k = 0; k < d; ++k) {
    if (k > 0) zpow *= sz / std::sqrt(static_cast<double>(k));
    // L_n^{(k)}(y) for n = 0 .. d-1-k
    const Index count = d - k;
    const double kk = static_cast<double>(k);
    lag[0] = 1.0;
    if (count > 1) lag[1] = 1.0 + kk - y;
    for (Index n = 1; n + 1 < count; ++n) {
      const double dn = static_cast<double>(n);
      lag[static_cast<std::size_t>(n + 1)] =
          ((2.0 * dn + 1.0 + kk - y) * lag[static_cast<std::size_t>(n)] -
           (dn + kk) * lag[static_cast<std::size_t>(n - 1)]) /
          (dn + 1.0);
    }
    // ratio sqrt(n!/m!) (sqrt2 z)^k with m = n + k, tracked as
    // zpow * sqrt(k! n! / (n+k)!) = zpow / sqrt(binom(n+k, n))
    double binom = 1.0;
    for (Index n = 0; n < count; ++n) {
      if (n > 0) binom *= static_cast<double>(n + k) / static_cast<double>(n);
      const double sign = (n % 2 == 0) ? 1.0 : -1.0;
      const Complex kernel = sign * zpow / std::sqrt(binom) * lag[static_cast<std::size_t>(n)];
      const Complex rho_mn = rho(n + k, n);
      total += (k == 0) ? (rho_mn * kernel).real() : 2.0 * (rho_mn * kernel).real();
    }
  }
  return total * std::exp(-r2) / std::numbers::pi;
}

/// Tr rho^2.
inline double purity(const DensityMatrix& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

}  // namespace cvtomo
