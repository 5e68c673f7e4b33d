#pragma once

#include <array>
#include <cmath>
#include <complex>

#include "triphoton/constants.hpp"

namespace triphoton {

namespace detail {

constexpr int kWeidemanN = 40;

struct WeidemanTable {
  double L;
  std::array<double, kWeidemanN> a;  // a[j] multiplies Z^j

  WeidemanTable() {
    constexpr int N = kWeidemanN, M = 2 * N, M2 = 2 * M;
    L = std::sqrt(N / std::sqrt(2.0));
    std::array<double, M2> f{};
    // f[0] = 0, f[1 + (k + M - 1)] for k = -M+1 .. M-1
    for (int k = -M + 1; k < M; ++k) {
      double t = L * std::tan(k * kPi / M2);
      f[k + M] = std::exp(-t * t) * (L * L + t * t);
    }
    std::array<double, M2> g{};
    for (int n = 0; n < M2; ++n) g[n] = f[(n + M2 / 2) % M2];
    for (int j = 1; j <= N; ++j) {
      double s = 0;
      for (int n = 0; n < M2; ++n) s += g[n] * std::cos(kTwoPi * j * n / M2);
      a[j - 1] = s / M2;
    }
  }
};

inline const WeidemanTable& weideman_table() {
  static const WeidemanTable t;
  return t;
}

}  // namespace detail

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz) for Im z >= 0.
/// Relative accuracy ~1e-13 in the upper half plane.
inline std::complex<double> faddeeva_upper(std::complex<double> z) {
  using cd = std::complex<double>;
  const cd I(0, 1);
  if (std::abs(z) > 8.0) {
    // Laplace continued fraction
    cd r = 0;
    for (int k = 20; k >= 1; --k) r = (0.5 * k) / (z - r);
    return I / std::sqrt(kPi) / (z - r);
  }
  const auto& t = detail::weideman_table();
  const cd denom = t.L - I * z;
  const cd Z = (t.L + I * z) / denom;
  cd p = 0;
  for (int j = detail::kWeidemanN - 1; j >= 0; --j) p = p * Z + t.a[j];
  return 2.0 * p / (denom * denom) + (1.0 / std::sqrt(kPi)) / denom;
}

/// Integral of a zero-mean normal density of width sigma against 1/(v - z),
/// for any z off the real axis.
inline std::complex<double> gaussian_cauchy_integral(std::complex<double> z, double sigma) {
  const double s = std::sqrt(2.0) * sigma;
  if (z.imag() > 0) return std::complex<double>(0, std::sqrt(kPi)) * faddeeva_upper(z / s) / s;
  return std::conj(gaussian_cauchy_integral(std::conj(z), sigma));
}

}  // namespace triphoton
