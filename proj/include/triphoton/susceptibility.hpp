#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <vector>

#include "triphoton/error.hpp"
#include "triphoton/grid.hpp"
#include "triphoton/physics.hpp"
#include "triphoton/quadrature.hpp"

namespace triphoton {

enum class EmittedMode { S1, S2, S3 };

/// Fifth-order susceptibility chi5(delta2, delta3), Doppler averaged.
class Chi5Evaluator {
 public:
  Chi5Evaluator(const ExperimentParams& p, VelocityQuadrature quad = {})
      : p_(p), integ_(p.thermal_velocity(), quad) {
    p.validate();
    const auto& d = p.dipoles;
    constexpr double hb = PhysicalConstants::hbar;
    prefactor_ = d.overall_scale_A * 2.0 * p.cell.density * d.mu13 * d.mu24 * d.mu23 * std::pow(d.mu14, 3) /
                 (PhysicalConstants::eps0 * hb * hb * hb * hb * hb);
  }

  RationalIntegrand integrand(double delta2, double delta3) const {
    constexpr double c = PhysicalConstants::c;
    const cd I(0, 1);
    const auto& r = p_.rates;
    const auto& dr = p_.drive;
    const double k31 = p_.frame.k31(), k42 = p_.frame.k42();
    RationalIntegrand g;
    g.numerator = Poly(prefactor_);
    g.add_factor(Poly(r.gamma31 + I * dr.delta[0], I * k31));
    // i(W- d2 + W+ d3) = i s0 + i s1 v
    const double s0 = delta2 + delta3, s1 = (delta3 - delta2) / c;
    Poly q2 = Poly(r.gamma21 + I * s0, I * s1) * Poly(r.gamma41 + I * (s0 + dr.delta[1]), I * (s1 - k42));
    q2 += dr.omega[1] * dr.omega[1];
    g.add_factor(q2);
    Poly q3 = Poly(r.gamma11 + I * delta3, I * delta3 / c) *
              Poly(r.gamma41 + I * (delta3 + dr.delta[2]), I * (delta3 / c + k42));
    q3 += dr.omega[2] * dr.omega[2];
    g.add_factor(q3);
    return g;
  }

  cd operator()(double delta2, double delta3) const { return integ_.integrate(integrand(delta2, delta3)); }

  const ExperimentParams& params() const { return p_; }
  const DopplerIntegrator& integrator() const { return integ_; }

 private:
  ExperimentParams p_;
  DopplerIntegrator integ_;
  double prefactor_ = 0;
};

inline cd chi5(double delta2, double delta3, const ExperimentParams& p, const VelocityQuadrature& quad = {}) {
  return Chi5Evaluator(p, quad)(delta2, delta3);
}

struct GridSpec2D {
  double lo1, hi1;
  std::size_t n1;
  double lo2, hi2;
  std::size_t n2;

  static GridSpec2D square(double half_width, std::size_t n) { return {-half_width, half_width, n, -half_width, half_width, n}; }
};

inline ComplexGrid2D chi5_map(const GridSpec2D& spec, const ExperimentParams& p, const VelocityQuadrature& quad = {},
                              unsigned threads = 0) {
  if (spec.n1 < 2 || spec.n2 < 2) throw InvalidParameter("chi5 map needs at least 2 samples per axis");
  const Chi5Evaluator chi(p, quad);
  ComplexGrid2D g(Axis::linspace("delta2", "rad/s", spec.lo1, spec.hi1, spec.n1),
                  Axis::linspace("delta3", "rad/s", spec.lo2, spec.hi2, spec.n2));
  parallel_for(
      g.rows(),
      [&](std::size_t i) {
        for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) = chi(g.axis1[i], g.axis2[j]);
      },
      threads);
  g.provenance = std::string("chi5_map quadrature=") + to_string(quad.scheme) + " params=" + p.hash();
  return g;
}

// ---------------------------------------------------------------------------
// Linear susceptibilities of the emitted modes. Im chi > 0 is absorption.

class LinearChiEvaluator {
 public:
  LinearChiEvaluator(EmittedMode mode, const ExperimentParams& p, VelocityQuadrature quad = {})
      : mode_(mode), p_(p), integ_(p.thermal_velocity(), quad) {
    p.validate();
    const double mu = mode == EmittedMode::S2 ? p.dipoles.mu24 : p.dipoles.mu14;
    prefactor_ = -4.0 * p.cell.density * mu * mu / (PhysicalConstants::eps0 * PhysicalConstants::hbar);
  }

  RationalIntegrand integrand(double delta) const {
    constexpr double c = PhysicalConstants::c;
    const cd I(0, 1);
    const auto& r = p_.rates;
    const auto& dr = p_.drive;
    const double k42 = p_.frame.k42();
    RationalIntegrand g;
    Poly a, b;
    double omega;
    if (mode_ == EmittedMode::S2) {
      b = Poly(delta + I * r.gamma22, -delta / c);
      a = Poly(delta - dr.delta[1] + I * r.gamma42, k42 - delta / c);
      omega = dr.omega[1];
    } else {
      b = Poly(delta + I * r.gamma11, delta / c);
      a = Poly(delta - dr.delta[2] + I * r.gamma41, delta / c - k42);
      omega = dr.omega[2];
    }
    g.numerator = b;
    for (int k = 0; k < 2; ++k) g.numerator.c[k] *= prefactor_;
    Poly q = Poly(4.0) * a * b;
    q += omega * omega;
    g.add_factor(q);
    return g;
  }

  cd operator()(double delta) const {
    if (mode_ == EmittedMode::S1) return 0;
    return integ_.integrate(integrand(delta));
  }

  EmittedMode mode() const { return mode_; }

 private:
  EmittedMode mode_;
  ExperimentParams p_;
  DopplerIntegrator integ_;
  double prefactor_ = 0;
};

/// The S1 photon sees no resonant medium.
inline cd chi_linear_s1() { return 0; }
inline cd chi_linear_s2(double delta2, const ExperimentParams& p, const VelocityQuadrature& quad = {}) {
  return LinearChiEvaluator(EmittedMode::S2, p, quad)(delta2);
}
inline cd chi_linear_s3(double delta3, const ExperimentParams& p, const VelocityQuadrature& quad = {}) {
  return LinearChiEvaluator(EmittedMode::S3, p, quad)(delta3);
}

// ---------------------------------------------------------------------------
// Dispersion

struct DispersionProfile {
  EmittedMode mode = EmittedMode::S2;
  Axis delta_axis;
  std::vector<cd> chi;
  std::vector<double> n;
  std::vector<double> v_group;

  /// Builds n and v_group from chi samples.
  static DispersionProfile from_chi(EmittedMode mode, Axis axis, std::vector<cd> chi) {
    if (chi.size() != axis.size) throw InvalidParameter("chi samples do not match the axis");
    if (axis.size < 2) throw InvalidParameter("dispersion profile needs at least 2 samples");
    DispersionProfile d;
    d.mode = mode;
    d.delta_axis = std::move(axis);
    d.chi = std::move(chi);
    const std::size_t m = d.chi.size();
    d.n.resize(m);
    d.v_group.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      double e = 1.0 + d.chi[i].real();
      if (!(e > 0)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "1 + Re chi = %g at delta = %g rad/s", e, d.delta_axis[i]);
        throw DispersionDomainError(buf);
      }
      d.n[i] = std::sqrt(e);
    }
    const double h = d.delta_axis.step;
    for (std::size_t i = 0; i < m; ++i) {
      double dn;
      if (i == 0)
        dn = (d.n[1] - d.n[0]) / h;
      else if (i == m - 1)
        dn = (d.n[m - 1] - d.n[m - 2]) / h;
      else
        dn = (d.n[i + 1] - d.n[i - 1]) / (2 * h);
      d.v_group[i] = PhysicalConstants::c / (1.0 + d.delta_axis[i] * dn);
    }
    return d;
  }

  static DispersionProfile vacuum(EmittedMode mode, Axis axis) {
    std::vector<cd> z(axis.size, cd(0));
    return from_chi(mode, std::move(axis), std::move(z));
  }

  double group_velocity(double delta) const {
    if (!delta_axis.contains(delta)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "offset %g rad/s outside dispersion profile", delta);
      throw RangeError(buf);
    }
    if (delta_axis.size == 1) return v_group[0];
    double x = (delta - delta_axis.start) / delta_axis.step;
    std::size_t i = std::min<std::size_t>(std::size_t(x), delta_axis.size - 2);
    double t = x - double(i);
    return v_group[i] * (1 - t) + v_group[i + 1] * t;
  }
};

inline DispersionProfile dispersion_profile(EmittedMode which, const Axis& delta_axis, const ExperimentParams& p,
                                            const VelocityQuadrature& quad = {}) {
  if (which == EmittedMode::S1) return DispersionProfile::vacuum(which, delta_axis);
  if (delta_axis.size < 64) throw InvalidParameter("dispersion profile axis needs >= 64 points");
  LinearChiEvaluator chi(which, p, quad);
  std::vector<cd> v(delta_axis.size);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = chi(delta_axis[i]);
  return DispersionProfile::from_chi(which, delta_axis, std::move(v));
}

// ---------------------------------------------------------------------------
// Phase matching

/// Group velocities of S2 and S3 used in the mismatch and group-delay terms.
struct ModeVelocities {
  const DispersionProfile* s2 = nullptr;  // nullptr means vacuum
  const DispersionProfile* s3 = nullptr;
  GroupDelayMode mode = GroupDelayMode::local;

  double v2(double delta2) const { return velocity(s2, delta2); }
  double v3(double delta3) const { return velocity(s3, delta3); }

 private:
  double velocity(const DispersionProfile* d, double delta) const {
    if (!d) return PhysicalConstants::c;
    return d->group_velocity(mode == GroupDelayMode::central ? 0.0 : delta);
  }
};

/// Wavevector mismatch (rad/m). Pumps are monochromatic; S1 travels at c.
inline double phase_mismatch(double delta2, double delta3, const ExperimentParams& p, const ModeVelocities& vel) {
  const DetuningOffsets off(delta2, delta3);
  const auto& s = p.frame.mismatch_sign;
  double dk = p.frame.central_mismatch();
  dk += s[kS1] * off.delta_s1() / PhysicalConstants::c;
  dk += s[kS2] * off.delta_s2() / vel.v2(delta2);
  dk += s[kS3] * off.delta_s3() / vel.v3(delta3);
  return dk;
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

/// Phi = sinc(dk L / 2) exp(-i dk L / 2).
inline cd longitudinal_phi(double dk, double L) {
  if (!(L > 0)) throw InvalidParameter("cell length must be > 0");
  const double x = 0.5 * dk * L;
  return sinc(x) * cd(std::cos(x), -std::sin(x));
}

// ---------------------------------------------------------------------------
// Peak structure of |chi5| maps

/// Max of |values| over axis2 for every axis1 sample.
inline std::vector<double> merged_profile(const ComplexGrid2D& g) {
  std::vector<double> m(g.rows(), 0.0);
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) m[i] = std::max(m[i], std::abs(g(i, j)));
  return m;
}

/// Gaussian smoothing with zero padding; sigma in samples.
inline std::vector<double> smooth_gaussian(const std::vector<double>& y, double sigma) {
  if (!(sigma > 0)) return y;
  const int r = int(std::ceil(4 * sigma)), n = int(y.size());
  std::vector<double> w(2 * r + 1);
  double norm = 0;
  for (int k = -r; k <= r; ++k) norm += w[k + r] = std::exp(-0.5 * k * k / (sigma * sigma));
  std::vector<double> out(y.size(), 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = -r; k <= r; ++k)
      if (i + k >= 0 && i + k < n) out[i] += w[k + r] * y[i + k] / norm;
  return out;
}

/// Indices of local maxima above rel_threshold * max whose topographic
/// prominence is at least rel_prominence * max.
inline std::vector<std::size_t> prominent_maxima(const std::vector<double>& y, double rel_threshold,
                                                 double rel_prominence) {
  std::vector<std::size_t> out;
  if (y.size() < 3) return out;
  const double top = *std::max_element(y.begin(), y.end());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
    if (y[i] < rel_threshold * top) continue;
    double left = y[i], right = y[i];
    for (std::size_t k = i; k > 0 && y[k - 1] <= y[i]; --k) left = std::min(left, y[k - 1]);
    for (std::size_t k = i; k + 1 < y.size() && y[k + 1] <= y[i]; ++k) right = std::min(right, y[k + 1]);
    if (y[i] - std::max(left, right) >= rel_prominence * top) out.push_back(i);
  }
  return out;
}

/// Distinct resonances along delta2 after merging over delta3: max-projection
/// of |chi5| smoothed by a Gaussian of `resolution` (rad/s), then peaks above
/// 10% of the maximum with at least 5% prominence.
inline std::vector<std::size_t> merged_maxima(const ComplexGrid2D& g, double resolution = mhz(50.0),
                                              double rel_threshold = 0.1, double rel_prominence = 0.05) {
  return prominent_maxima(smooth_gaussian(merged_profile(g), resolution / g.axis1.step), rel_threshold,
                          rel_prominence);
}

struct MapPeak {
  std::size_t i = 0, j = 0;
  double value = 0;
  std::size_t cells = 0;
};

/// Argmax of every 8-connected component of {|values| >= rel_level * max}
/// containing at least min_cells cells, sorted by decreasing value.
inline std::vector<MapPeak> superlevel_peaks(const ComplexGrid2D& g, double rel_level = 0.1, std::size_t min_cells = 8) {
  const std::size_t R = g.rows(), C = g.cols();
  std::vector<double> a(R * C);
  double top = 0;
  for (std::size_t k = 0; k < a.size(); ++k) top = std::max(top, a[k] = std::abs(g.values[k]));
  std::vector<int> label(R * C, -1);
  std::vector<MapPeak> out;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (label[s] >= 0 || a[s] < rel_level * top) continue;
    MapPeak pk;
    stack.assign(1, s);
    label[s] = 1;
    while (!stack.empty()) {
      std::size_t k = stack.back();
      stack.pop_back();
      ++pk.cells;
      if (a[k] > pk.value) {
        pk.value = a[k];
        pk.i = k / C;
        pk.j = k % C;
      }
      const long ki = long(k / C), kj = long(k % C);
      for (long di = -1; di <= 1; ++di)
        for (long dj = -1; dj <= 1; ++dj) {
          long ni = ki + di, nj = kj + dj;
          if (ni < 0 || nj < 0 || ni >= long(R) || nj >= long(C)) continue;
          std::size_t nk = std::size_t(ni) * C + std::size_t(nj);
          if (label[nk] < 0 && a[nk] >= rel_level * top) {
            label[nk] = 1;
            stack.push_back(nk);
          }
        }
    }
    if (pk.cells >= min_cells) out.push_back(pk);
  }
  std::sort(out.begin(), out.end(), [](const MapPeak& x, const MapPeak& y) { return x.value > y.value; });
  return out;
}

/// Distance, in grid cells (Chebyshev), from (delta2, delta3) to the nearest
/// point of the velocity-swept resonance locus of one (E2, E3) branch pair.
/// branch indexes ResonanceSet::d2_by_branch.
inline double locus_distance_cells(const ExperimentParams& p, int branch, double delta2, double delta3, double step1,
                                   double step2, double v_sigmas = 3.0, int samples = 2001) {
  const double sv = p.thermal_velocity();
  double best = 1e300;
  for (int k = 0; k < samples; ++k) {
    const double v = -v_sigmas * sv + 2.0 * v_sigmas * sv * k / (samples - 1);
    const auto rs = resonance_set(p, v);
    const double d = std::max(std::abs(rs.d2_by_branch[branch] - delta2) / step1,
                              std::abs(rs.centers_d3[1 - branch % 2] - delta3) / step2);
    best = std::min(best, d);
  }
  return best;
}

}  // namespace triphoton
