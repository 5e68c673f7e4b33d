#pragma once

// Velocity averaging of rational integrands against the Maxwell-Boltzmann
// density. Three schemes:
//   pole_expansion  exact partial-fraction sum with Faddeeva weights (default)
//   gauss_hermite   n-point Gauss-Hermite rule
//   uniform_riemann equally spaced nodes over +-range_sigmas thermal widths

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "triphoton/error.hpp"
#include "triphoton/faddeeva.hpp"
#include "triphoton/physics.hpp"

namespace triphoton {

using cd = std::complex<double>;

enum class QuadratureScheme { pole_expansion, gauss_hermite, uniform_riemann };

inline const char* to_string(QuadratureScheme s) {
  switch (s) {
    case QuadratureScheme::pole_expansion: return "pole-expansion";
    case QuadratureScheme::gauss_hermite: return "gauss-hermite";
    default: return "uniform-riemann";
  }
}

struct VelocityQuadrature {
  QuadratureScheme scheme = QuadratureScheme::pole_expansion;
  int node_count = 64;        // gauss_hermite / uniform_riemann
  double range_sigmas = 8.0;  // uniform_riemann only

  static VelocityQuadrature riemann(int n = 20000, double range = 8.0) {
    return {QuadratureScheme::uniform_riemann, n, range};
  }
  static VelocityQuadrature hermite(int n = 64) { return {QuadratureScheme::gauss_hermite, n, 8.0}; }

  void validate() const {
    if (scheme == QuadratureScheme::pole_expansion) return;
    if (node_count < 8) throw InvalidParameter("quadrature node_count must be >= 8");
    if (scheme == QuadratureScheme::gauss_hermite && node_count > 180)
      throw InvalidParameter("gauss-hermite node_count must be <= 180");
    if (scheme == QuadratureScheme::uniform_riemann && !(range_sigmas >= 3))
      throw InvalidParameter("quadrature range_sigmas must be >= 3");
  }
};

/// Complex polynomial in v, ascending coefficients, degree <= 5.
struct Poly {
  std::array<cd, 6> c{};
  int deg = 0;

  Poly() = default;
  Poly(cd c0) : deg(0) { c[0] = c0; }
  Poly(cd c0, cd c1) : deg(1) {
    c[0] = c0;
    c[1] = c1;
  }

  cd operator()(cd v) const {
    cd r = c[deg];
    for (int k = deg - 1; k >= 0; --k) r = r * v + c[k];
    return r;
  }
  cd derivative(cd v) const {
    if (deg == 0) return 0;
    cd r = double(deg) * c[deg];
    for (int k = deg - 1; k >= 1; --k) r = r * v + double(k) * c[k];
    return r;
  }
  /// Drops leading coefficients that are negligible against the rest.
  Poly& trim(double scale) {
    while (deg > 0) {
      double rest = 0;
      for (int k = 0; k < deg; ++k) rest = std::max(rest, std::abs(c[k]) * std::pow(scale, k));
      if (std::abs(c[deg]) * std::pow(scale, deg) > 1e-15 * rest) break;
      c[deg] = 0;
      --deg;
    }
    return *this;
  }
  friend Poly operator*(const Poly& a, const Poly& b) {
    Poly r;
    r.deg = a.deg + b.deg;
    if (r.deg > 5) throw InvalidParameter("polynomial degree exceeds 5");
    for (int i = 0; i <= a.deg; ++i)
      for (int j = 0; j <= b.deg; ++j) r.c[i + j] += a.c[i] * b.c[j];
    return r;
  }
  Poly& operator+=(cd x) {
    c[0] += x;
    return *this;
  }
};

/// numerator(v) / prod_k factors[k](v), each factor of degree <= 2.
struct RationalIntegrand {
  Poly numerator;
  std::array<Poly, 3> factors;
  int n_factors = 0;

  void add_factor(const Poly& p) { factors[n_factors++] = p; }

  cd operator()(double v) const {
    cd d = 1;
    for (int k = 0; k < n_factors; ++k) d *= factors[k](v);
    return numerator(v) / d;
  }
};

class DopplerIntegrator {
 public:
  DopplerIntegrator(double sigma_v, VelocityQuadrature quad) : sigma_(sigma_v), quad_(quad) {
    if (!(sigma_v > 0)) throw InvalidParameter("thermal velocity must be > 0");
    quad_.validate();
    if (quad_.scheme == QuadratureScheme::gauss_hermite)
      build_hermite(quad_.node_count);
    else if (quad_.scheme == QuadratureScheme::uniform_riemann)
      build_riemann(quad_.node_count, quad_.range_sigmas);
    else
      riemann_nodes(20000, 8.0, fb_nodes_, fb_weights_);
  }

  double sigma() const { return sigma_; }
  const VelocityQuadrature& quadrature() const { return quad_; }

  /// Integral of f(v) * g(v) dv with f the normal density of width sigma.
  cd integrate(const RationalIntegrand& g) const {
    if (quad_.scheme == QuadratureScheme::pole_expansion) return pole_sum(g);
    return node_sum(g, nodes_, weights_);
  }

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  static cd node_sum(const RationalIntegrand& g, const std::vector<double>& x, const std::vector<double>& w) {
    cd s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      cd y = g(x[i]);
      if (!std::isfinite(y.real()) || !std::isfinite(y.imag()))
        throw NumericalDomainError("non-finite Doppler integrand sample", x[i]);
      s += w[i] * y;
    }
    return s;
  }

  cd fallback(const RationalIntegrand& g) const {
    return node_sum(g, fb_nodes_, fb_weights_);
  }

  cd pole_sum(const RationalIntegrand& g) const {
    std::array<cd, 6> roots;
    std::array<int, 6> owner;
    int n = 0, total_deg = 0;
    std::array<Poly, 3> fac = g.factors;
    for (int k = 0; k < g.n_factors; ++k) {
      Poly& p = fac[k].trim(sigma_);
      total_deg += p.deg;
      if (p.deg == 1) {
        roots[n] = -p.c[0] / p.c[1];
        owner[n++] = k;
      } else if (p.deg == 2) {
        const cd a = p.c[2], b = p.c[1], c = p.c[0];
        cd disc = std::sqrt(b * b - 4.0 * a * c);
        if (std::real(std::conj(b) * disc) < 0) disc = -disc;
        const cd q = -0.5 * (b + disc);
        roots[n] = q / a;
        owner[n++] = k;
        roots[n] = c / q;
        owner[n++] = k;
      }
    }
    if (g.numerator.deg >= total_deg) return fallback(g);
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(roots[i].real()) || !std::isfinite(roots[i].imag())) return fallback(g);
      if (std::abs(roots[i].imag()) < 1e-9 * sigma_)
        throw NumericalDomainError("Doppler integrand pole on the real velocity axis", roots[i].real());
      for (int j = 0; j < i; ++j)
        if (std::abs(roots[i] - roots[j]) < 1e-6 * (std::abs(roots[i]) + 1e-3 * sigma_)) return fallback(g);
    }
    cd s = 0;
    for (int i = 0; i < n; ++i) {
      const cd z = roots[i];
      cd dprime = fac[owner[i]].derivative(z);
      for (int k = 0; k < g.n_factors; ++k)
        if (k != owner[i]) dprime *= fac[k](z);
      s += g.numerator(z) / dprime * gaussian_cauchy_integral(z, sigma_);
    }
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
      throw NumericalDomainError("non-finite pole expansion", 0.0);
    return s;
  }

  void riemann_nodes(int n, double range, std::vector<double>& x, std::vector<double>& w) const {
    x.resize(n);
    w.resize(n);
    const double lo = -range * sigma_, h = 2.0 * range * sigma_ / (n - 1);
    const double norm = 1.0 / (std::sqrt(kTwoPi) * sigma_);
    for (int i = 0; i < n; ++i) {
      x[i] = lo + i * h;
      const double u = x[i] / sigma_;
      w[i] = h * norm * std::exp(-0.5 * u * u) * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
    }
  }

  void build_riemann(int n, double range) { riemann_nodes(n, range, nodes_, weights_); }

  // Physicists' Hermite nodes by Newton iteration on the orthonormal recurrence.
  void build_hermite(int n) {
    std::vector<double> x(n), w(n);
    const double pim4 = std::pow(kPi, -0.25);
    double z = 0;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      if (i == 0)
        z = std::sqrt(2.0 * n + 1) - 1.85575 * std::pow(2.0 * n + 1, -1.0 / 6.0);
      else if (i == 1)
        z -= 1.14 * std::pow(double(n), 0.426) / z;
      else if (i == 2)
        z = 1.86 * z - 0.86 * x[0];
      else if (i == 3)
        z = 1.91 * z - 0.91 * x[1];
      else
        z = 2.0 * z - x[i - 2];
      double pp = 0;
      for (int it = 0; it < 100; ++it) {
        double p1 = pim4, p2 = 0;
        for (int j = 0; j < n; ++j) {
          double p3 = p2;
          p2 = p1;
          p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
        }
        pp = std::sqrt(2.0 * n) * p2;
        double z1 = z;
        z = z1 - p1 / pp;
        if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
      }
      x[i] = z;
      x[n - 1 - i] = -z;
      w[i] = w[n - 1 - i] = 2.0 / (pp * pp);
    }
    nodes_.resize(n);
    weights_.resize(n);
    for (int i = 0; i < n; ++i) {
      nodes_[i] = std::sqrt(2.0) * sigma_ * x[i];
      weights_[i] = w[i] / std::sqrt(kPi);
    }
  }

  double sigma_;
  VelocityQuadrature quad_;
  std::vector<double> nodes_, weights_;
  std::vector<double> fb_nodes_, fb_weights_;
};

}  // namespace triphoton
