#pragma once

// Triphoton temporal correlations. The amplitude is the 2-D transform of the
// spectral kernel
//   K(d2, d3) = chi5 * sinc(dk L / 2) * exp(-i d2 L/2v2) * exp(-i d3 L/2v3)
// taken as
//   A3(t21, t31) = (2 pi)^-2  iint K exp(+i d2 t21) exp(+i d3 t31)
// so that causal response sits at t > 0 and the group delay shifts it later.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "triphoton/error.hpp"
#include "triphoton/fourier.hpp"
#include "triphoton/grid.hpp"
#include "triphoton/physics.hpp"
#include "triphoton/quadrature.hpp"
#include "triphoton/susceptibility.hpp"

namespace triphoton {

enum class TransformPath { direct, fourier };

inline const char* to_string(TransformPath p) { return p == TransformPath::direct ? "direct" : "fourier"; }

struct SpectralGridSpec {
  double step = mhz(2.0);
  bool auto_window = true;
  double lo2 = 0, hi2 = 0, lo3 = 0, hi3 = 0;  // used when auto_window is false
  double linewidths = 8.0;
  double v_sigmas = 3.0;
  double clip = ghz(5.0);
  double taper_fraction = 0.05;
};

struct TauGridSpec {
  double lo21 = 0, hi21 = 40e-9;
  std::size_t n21 = 256;
  double lo31 = 0, hi31 = 40e-9;
  std::size_t n31 = 256;

  static TauGridSpec square(double lo, double hi, std::size_t n) { return {lo, hi, n, lo, hi, n}; }
  Axis axis21() const { return Axis::linspace("tau21", "s", lo21, hi21, n21); }
  Axis axis31() const { return Axis::linspace("tau31", "s", lo31, hi31, n31); }
};

struct SpectralWindow {
  double lo2, hi2, lo3, hi3;
};

/// Union of the resonance centres over |v| <= v_sigmas thermal widths, padded
/// by `linewidths` effective linewidths and clipped to +-clip.
inline SpectralWindow spectral_window(const ExperimentParams& p, const SpectralGridSpec& s) {
  if (!s.auto_window) return {s.lo2, s.hi2, s.lo3, s.hi3};
  const double sv = p.thermal_velocity();
  const double floor_width = p.rates.gamma41;
  SpectralWindow w{1e300, -1e300, 1e300, -1e300};
  const int samples = 401;
  for (int k = 0; k < samples; ++k) {
    const double v = -s.v_sigmas * sv + 2.0 * s.v_sigmas * sv * k / (samples - 1);
    const auto rs = resonance_set(p, v);
    const double m2 = s.linewidths * std::max(floor_width, std::abs(rs.linewidth_d2));
    const double m3 = s.linewidths * std::max(floor_width, std::abs(rs.linewidth_d3));
    for (double c : rs.centers_d2) {
      w.lo2 = std::min(w.lo2, c - m2);
      w.hi2 = std::max(w.hi2, c + m2);
    }
    for (double c : rs.centers_d3) {
      w.lo3 = std::min(w.lo3, c - m3);
      w.hi3 = std::max(w.hi3, c + m3);
    }
  }
  w.lo2 = std::max(w.lo2, -s.clip);
  w.hi2 = std::min(w.hi2, s.clip);
  w.lo3 = std::max(w.lo3, -s.clip);
  w.hi3 = std::min(w.hi3, s.clip);
  return w;
}

/// Raised-cosine edge taper: 0 at the first/last sample, 1 in the interior.
inline std::vector<double> edge_taper(std::size_t n, double fraction) {
  std::vector<double> w(n, 1.0);
  const double edge = fraction * double(n - 1);
  if (!(edge > 0) || n < 3) return w;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::min(double(i), double(n - 1 - i));
    if (d < edge) w[i] = 0.5 * (1.0 - std::cos(kPi * d / edge));
  }
  return w;
}

struct SpectralKernel {
  ComplexGrid2D kernel;     // axes delta2 (rows), delta3 (cols), rad/s
  double chi_scale = 0;     // max |chi5| on the grid; kernel = chi5 / chi_scale * ...
  double delay2 = 0, delay3 = 0;  // L / 2 v at zero offset
};

/// Kernel of the amplitude transform on the spectral grid.
inline SpectralKernel spectral_kernel(const ExperimentParams& p, const VelocityQuadrature& quad,
                                      const SpectralGridSpec& spec) {
  if (!(spec.step > 0)) throw InvalidParameter("spectral step must be > 0");
  const SpectralWindow w = spectral_window(p, spec);
  if (!(w.hi2 > w.lo2) || !(w.hi3 > w.lo3)) throw InvalidParameter("empty spectral window");
  const std::size_t n2 = std::size_t(std::ceil((w.hi2 - w.lo2) / spec.step)) + 1;
  const std::size_t n3 = std::size_t(std::ceil((w.hi3 - w.lo3) / spec.step)) + 1;
  Axis a2{"delta2", "rad/s", w.lo2, spec.step, n2};
  Axis a3{"delta3", "rad/s", w.lo3, spec.step, n3};

  const double L = p.cell.length;
  const Axis d2z = Axis::linspace("delta2", "rad/s", std::min(a2.start, -spec.step), std::max(a2.back(), spec.step),
                                  std::max<std::size_t>(n2, 64));
  const Axis d3z = Axis::linspace("delta3", "rad/s", std::min(a3.start, -spec.step), std::max(a3.back(), spec.step),
                                  std::max<std::size_t>(n3, 64));
  const DispersionProfile prof2 = dispersion_profile(EmittedMode::S2, d2z, p, quad);
  const DispersionProfile prof3 = dispersion_profile(EmittedMode::S3, d3z, p, quad);
  const ModeVelocities vel{&prof2, &prof3, p.model.group_delay_mode};

  SpectralKernel out;
  out.kernel = ComplexGrid2D(a2, a3);
  auto& K = out.kernel;
  const Chi5Evaluator chi(p, quad);
  parallel_for(K.rows(), [&](std::size_t i) {
    for (std::size_t j = 0; j < K.cols(); ++j) K(i, j) = chi(a2[i], a3[j]);
  });
  for (const auto& z : K.values) out.chi_scale = std::max(out.chi_scale, std::abs(z));
  if (!(out.chi_scale > 0)) throw NumericalDomainError("chi5 vanishes on the spectral grid", 0.0);

  std::vector<double> v2(n2), v3(n3);
  std::vector<cd> ph2(n2), ph3(n3);
  for (std::size_t i = 0; i < n2; ++i) {
    v2[i] = vel.v2(a2[i]);
    ph2[i] = std::polar(1.0, -a2[i] * L / (2 * v2[i]));
  }
  for (std::size_t j = 0; j < n3; ++j) {
    v3[j] = vel.v3(a3[j]);
    ph3[j] = std::polar(1.0, -a3[j] * L / (2 * v3[j]));
  }
  const auto t2 = edge_taper(n2, spec.taper_fraction), t3 = edge_taper(n3, spec.taper_fraction);
  const auto& sg = p.frame.mismatch_sign;
  for (std::size_t i = 0; i < n2; ++i)
    for (std::size_t j = 0; j < n3; ++j) {
      const double d2v = a2[i], d3v = a3[j];
      const DetuningOffsets off(d2v, d3v);
      const double dk = p.frame.central_mismatch() + sg[kS1] * off.delta_s1() / PhysicalConstants::c +
                        sg[kS2] * d2v / v2[i] + sg[kS3] * d3v / v3[j];
      K(i, j) = K(i, j) / out.chi_scale * sinc(0.5 * dk * L) * ph2[i] * ph3[j] * (t2[i] * t3[j]);
    }
  out.delay2 = L / (2 * vel.v2(0.0));
  out.delay3 = L / (2 * vel.v3(0.0));
  char buf[160];
  std::snprintf(buf, sizeof buf, "spectral_kernel step=%.6g window=[%.6g,%.6g]x[%.6g,%.6g] chi_scale=%.6g params=%s",
                spec.step, a2.start, a2.back(), a3.start, a3.back(), out.chi_scale, p.hash().c_str());
  K.provenance = buf;
  return out;
}

/// Minimum number of uniform spectral samples over `span` needed to resolve
/// delays up to max_abs_tau without aliasing.
inline std::size_t required_spectral_size(double span, double max_abs_tau) {
  return std::size_t(std::ceil(2.0 * max_abs_tau * span / kTwoPi)) + 2;
}

inline void check_nyquist(const Axis& delta, double tau_lo, double tau_hi, const char* which) {
  const double period = kTwoPi / delta.step;
  const double tmax = std::max(std::abs(tau_lo), std::abs(tau_hi));
  if (!(tmax < 0.5 * period)) {
    char buf[192];
    std::snprintf(buf, sizeof buf, "%s spectral step too coarse: alias period %.4g s, requested |tau| up to %.4g s",
                  which, period, tmax);
    const double span = delta.step * double(delta.size - 1);
    throw SamplingError(buf, required_spectral_size(span, tmax));
  }
}

/// Raw (unnormalized) A3 on a tau grid from a sampled kernel.
inline ComplexGrid2D transform_kernel(const ComplexGrid2D& K, const TauGridSpec& tau, TransformPath path) {
  const Axis& x2 = K.axis1;
  const Axis& x3 = K.axis2;
  check_nyquist(x2, tau.lo21, tau.hi21, "delta2");
  check_nyquist(x3, tau.lo31, tau.hi31, "delta3");
  ComplexGrid2D A(tau.axis21(), tau.axis31());
  const std::size_t N2 = x2.size, N3 = x3.size, M2 = tau.n21, M3 = tau.n31;
  const double norm = x2.step * x3.step / (kTwoPi * kTwoPi);

  if (path == TransformPath::fourier) {
    // rectangle rule; transform along delta3 then delta2
    std::vector<cd> tmp(N2 * M3);
    ChirpZ cz3(N3, x3.start, x3.step, M3, A.axis2.start, A.axis2.step);
    for (std::size_t i = 0; i < N2; ++i) cz3.apply(&K.values[i * N3], 1, &tmp[i * M3], 1);
    ChirpZ cz2(N2, x2.start, x2.step, M2, A.axis1.start, A.axis1.step);
    for (std::size_t k = 0; k < M3; ++k) cz2.apply(&tmp[k], M3, &A.values[k], M3);
    for (auto& z : A.values) z *= norm;
  } else {
    // trapezoid rule with explicit phases
    std::vector<double> w2(N2, 1.0), w3(N3, 1.0);
    if (N2 > 1) w2.front() = w2.back() = 0.5;
    if (N3 > 1) w3.front() = w3.back() = 0.5;
    std::vector<cd> e3(M3 * N3);
    for (std::size_t k = 0; k < M3; ++k)
      for (std::size_t j = 0; j < N3; ++j) e3[k * N3 + j] = w3[j] * std::polar(1.0, x3[j] * A.axis2[k]);
    std::vector<cd> e2(M2 * N2);
    for (std::size_t m = 0; m < M2; ++m)
      for (std::size_t i = 0; i < N2; ++i) e2[m * N2 + i] = w2[i] * std::polar(1.0, x2[i] * A.axis1[m]);
    std::vector<cd> B(N2 * M3);
    parallel_for(N2, [&](std::size_t i) {
      const cd* row = &K.values[i * N3];
      for (std::size_t k = 0; k < M3; ++k) {
        const cd* e = &e3[k * N3];
        cd s = 0;
        for (std::size_t j = 0; j < N3; ++j) s += row[j] * e[j];
        B[i * M3 + k] = s;
      }
    });
    parallel_for(M2, [&](std::size_t m) {
      const cd* e = &e2[m * N2];
      for (std::size_t k = 0; k < M3; ++k) {
        cd s = 0;
        for (std::size_t i = 0; i < N2; ++i) s += B[i * M3 + k] * e[i];
        A(m, k) = s * norm;
      }
    });
  }
  A.provenance = std::string("transform path=") + to_string(path) + " of " + K.provenance;
  return A;
}

struct CorrelationMap {
  ComplexGrid2D grid;  // normalized A3 over (tau21, tau31)
  RealGrid2D r3;       // |A3|^2, max 1
  std::string params_hash;
  double amplitude_scale = 1;  // raw A3 = grid * amplitude_scale

  static CorrelationMap from_amplitude(ComplexGrid2D A, std::string hash) {
    CorrelationMap m;
    double peak = 0;
    for (const auto& z : A.values) peak = std::max(peak, std::abs(z));
    if (peak > 0)
      for (auto& z : A.values) z /= peak;
    m.amplitude_scale = peak;
    m.r3 = RealGrid2D(A.axis1, A.axis2);
    for (std::size_t k = 0; k < A.values.size(); ++k) m.r3.values[k] = std::norm(A.values[k]);
    m.r3.provenance = A.provenance;
    m.grid = std::move(A);
    m.params_hash = std::move(hash);
    return m;
  }
};

inline void check_tau_span(const TauGridSpec& tau) {
  if (tau.lo21 > 0 || tau.hi21 < 20e-9 || tau.lo31 > 0 || tau.hi31 < 20e-9)
    throw InvalidParameter("tau grid must span at least [0, 20 ns] on both axes");
}

inline CorrelationMap triphoton_amplitude_map(const TauGridSpec& tau, const ExperimentParams& p,
                                              const VelocityQuadrature& quad = {}, const SpectralGridSpec& spec = {},
                                              TransformPath path = TransformPath::fourier) {
  check_tau_span(tau);
  const auto k = spectral_kernel(p, quad, spec);
  return CorrelationMap::from_amplitude(transform_kernel(k.kernel, tau, path), p.hash());
}

// ---------------------------------------------------------------------------
// Conditional traces

enum class TraceKind { trace_out_s3, trace_out_s2, trace_out_s1, fixed_line };

inline const char* to_string(TraceKind k) {
  switch (k) {
    case TraceKind::trace_out_s3: return "trace-out-S3";
    case TraceKind::trace_out_s2: return "trace-out-S2";
    case TraceKind::trace_out_s1: return "trace-out-S1";
    default: return "fixed-line";
  }
}

struct ConditionalTrace {
  Axis axis;
  std::vector<double> values;  // max-normalized unless noted
  TraceKind kind = TraceKind::trace_out_s3;
  std::string line_spec;
  double scale = 1;  // raw = values * scale

  void normalize() {
    double m = 0;
    for (double v : values) m = std::max(m, v);
    scale = m > 0 ? m : 1;
    if (m > 0)
      for (double& v : values) v /= m;
  }
};

/// R2 from the closed single-integral form:
///   R2(t) = int dd3 | int dd2 K exp(+i d2 t) |^2
/// with the same discretization as transform_kernel's Fourier path.
inline ConditionalTrace conditional_r2_from_kernel(const ComplexGrid2D& K, const Axis& tau) {
  const Axis& x2 = K.axis1;
  const Axis& x3 = K.axis2;
  check_nyquist(x2, tau.start, tau.back(), "delta2");
  const std::size_t N2 = x2.size, N3 = x3.size, M = tau.size;
  ChirpZ cz(N2, x2.start, x2.step, M, tau.start, tau.step);
  std::vector<cd> col(M);
  std::vector<double> acc(M, 0.0);
  const double n2 = x2.step / (kTwoPi);
  for (std::size_t j = 0; j < N3; ++j) {
    cz.apply(&K.values[j], N3, col.data(), 1);
    for (std::size_t m = 0; m < M; ++m) acc[m] += std::norm(col[m] * n2);
  }
  ConditionalTrace t;
  t.axis = tau;
  t.axis.name = "tau21";
  t.values.resize(M);
  for (std::size_t m = 0; m < M; ++m) t.values[m] = acc[m] * x3.step / kTwoPi;
  t.kind = TraceKind::trace_out_s3;
  t.line_spec = "closed form";
  t.normalize();
  return t;
}

inline ConditionalTrace conditional_r2_closed(const Axis& tau, const ExperimentParams& p,
                                              const VelocityQuadrature& quad = {}, const SpectralGridSpec& spec = {}) {
  return conditional_r2_from_kernel(spectral_kernel(p, quad, spec).kernel, tau);
}

/// Marginalizes r3 over one delay. The raw sums are kept in `scale`.
inline ConditionalTrace trace_map(const CorrelationMap& map, TraceKind kind) {
  const RealGrid2D& r = map.r3;
  ConditionalTrace t;
  t.kind = kind;
  if (kind == TraceKind::trace_out_s3) {
    t.axis = r.axis1;
    t.values.assign(r.rows(), 0.0);
    for (std::size_t i = 0; i < r.rows(); ++i)
      for (std::size_t j = 0; j < r.cols(); ++j) t.values[i] += r(i, j);
  } else if (kind == TraceKind::trace_out_s2) {
    t.axis = r.axis2;
    t.values.assign(r.cols(), 0.0);
    for (std::size_t i = 0; i < r.rows(); ++i)
      for (std::size_t j = 0; j < r.cols(); ++j) t.values[j] += r(i, j);
  } else if (kind == TraceKind::trace_out_s1) {
    const double d = r.axis1.step;
    if (std::abs(r.axis2.step - d) > 1e-9 * d) throw InvalidParameter("trace-out-S1 needs equal tau steps on both axes");
    const std::size_t n1 = r.rows(), n2 = r.cols();
    t.axis = Axis{"tau32", "s", r.axis2.start - r.axis1.start - double(n1 - 1) * d, d, n1 + n2 - 1};
    t.values.assign(n1 + n2 - 1, 0.0);
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = 0; j < n2; ++j) t.values[j + (n1 - 1 - i)] += r(i, j);
  } else {
    throw InvalidParameter("use diagonal_cut for fixed-line traces");
  }
  t.normalize();
  return t;
}

/// r3 along tau21 + tau31 = c, linearly interpolated in tau31; axis is tau21.
inline ConditionalTrace diagonal_cut(const CorrelationMap& map, double c) {
  const RealGrid2D& r = map.r3;
  ConditionalTrace t;
  t.kind = TraceKind::fixed_line;
  char buf[64];
  std::snprintf(buf, sizeof buf, "tau21+tau31=%.9g", c);
  t.line_spec = buf;
  std::size_t first = r.rows(), count = 0;
  std::vector<double> vals;
  for (std::size_t i = 0; i < r.rows(); ++i) {
    const double t31 = c - r.axis1[i];
    if (!r.axis2.contains(t31)) {
      if (count > 0) break;
      continue;
    }
    if (count == 0) first = i;
    ++count;
    double x = (t31 - r.axis2.start) / r.axis2.step;
    std::size_t j = std::min<std::size_t>(std::size_t(x), r.cols() > 1 ? r.cols() - 2 : 0);
    double f = r.cols() > 1 ? x - double(j) : 0.0;
    vals.push_back(r.cols() > 1 ? r(i, j) * (1 - f) + r(i, j + 1) * f : r(i, 0));
  }
  if (count == 0) throw RangeError("diagonal line does not intersect the map");
  t.axis = Axis{"tau21", "s", r.axis1[first], r.axis1.step, count};
  t.values = std::move(vals);
  t.scale = 1;
  return t;
}

// ---------------------------------------------------------------------------
// Trace metrics

struct SpectralPeak {
  double frequency;   // Hz
  double period;      // s
  double prominence;  // topographic prominence of the amplitude spectrum, relative to its DC value
  double relative;    // prominence relative to the most prominent peak
};

/// Local maxima of the Hann-windowed, zero-padded amplitude spectrum of the
/// mean-removed trace, excluding f < 2 / duration, ranked by prominence.
inline std::vector<SpectralPeak> spectral_peaks(const ConditionalTrace& tr, std::size_t max_peaks = 8) {
  const std::size_t n = tr.values.size();
  std::vector<SpectralPeak> out;
  if (n < 8) return out;
  double mean = 0, wsum = 0;
  for (double v : tr.values) mean += v;
  mean /= double(n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 * (1.0 - std::cos(kTwoPi * double(i) / double(n - 1)));
    x[i] = (tr.values[i] - mean) * w;
    wsum += w;
  }
  std::size_t nfft = 1;
  while (nfft < 8 * n) nfft <<= 1;
  auto p = power_spectrum(x, nfft);
  for (double& v : p) v = std::sqrt(v);
  const double dc = std::abs(mean) * wsum > 0 ? std::abs(mean) * wsum : 1.0;
  const double df = 1.0 / (double(nfft) * tr.axis.step);
  const double fmin = 2.0 / (tr.axis.step * double(n - 1));
  for (std::size_t k = 1; k + 1 < p.size(); ++k) {
    if (double(k) * df < fmin) continue;
    if (!(p[k] > p[k - 1] && p[k] >= p[k + 1])) continue;
    double left = p[k], right = p[k];
    for (std::size_t q = k; q > 0 && p[q - 1] <= p[k]; --q) left = std::min(left, p[q - 1]);
    for (std::size_t q = k; q + 1 < p.size() && p[q + 1] <= p[k]; ++q) right = std::min(right, p[q + 1]);
    const double prom = p[k] - std::max(left, right);
    const double a = p[k - 1], b = p[k], c = p[k + 1];
    const double den = a - 2 * b + c;
    const double f = (double(k) + (den != 0 ? 0.5 * (a - c) / den : 0.0)) * df;
    out.push_back({f, 1.0 / f, prom / dc, 0.0});
  }
  std::sort(out.begin(), out.end(),
            [](const SpectralPeak& u, const SpectralPeak& v) { return u.prominence > v.prominence; });
  if (out.size() > max_peaks) out.resize(max_peaks);
  if (!out.empty() && out.front().prominence > 0)
    for (auto& s : out) s.relative = s.prominence / out.front().prominence;
  return out;
}

/// Peaks within `rel` of the most prominent one and above `abs_floor` of DC.
inline std::size_t significant_peak_count(const std::vector<SpectralPeak>& peaks, double rel = 0.25,
                                          double abs_floor = 0.005) {
  return std::size_t(std::count_if(peaks.begin(), peaks.end(), [&](const SpectralPeak& s) {
    return s.relative >= rel && s.prominence >= abs_floor;
  }));
}

/// Median of the 10% of samples farthest from the global peak.
inline double trace_floor(const ConditionalTrace& tr) {
  const std::size_t n = tr.values.size();
  if (n == 0) return 0;
  const std::size_t ipk = std::size_t(std::max_element(tr.values.begin(), tr.values.end()) - tr.values.begin());
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  auto dist = [&](std::size_t i) { return i > ipk ? i - ipk : ipk - i; };
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return dist(a) > dist(b); });
  const std::size_t m = std::max<std::size_t>(1, n / 10);
  std::vector<double> v(m);
  for (std::size_t k = 0; k < m; ++k) v[k] = tr.values[idx[k]];
  std::sort(v.begin(), v.end());
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

struct PeriodEstimate {
  double period = 0;           // s, from peak spacing (spectral when spacing is unusable)
  double spectral_period = 0;  // s
  double confidence = 0;       // 0..1
  std::size_t maxima = 0;
};

inline PeriodEstimate oscillation_period(const ConditionalTrace& tr) {
  PeriodEstimate est;
  const auto& y = tr.values;
  const std::size_t n = y.size();
  const auto spec = spectral_peaks(tr, 1);
  if (significant_peak_count(spec) > 0) est.spectral_period = spec.front().period;
  if (n < 3) return est;
  const double floor = trace_floor(tr);
  const double top = *std::max_element(y.begin(), y.end());
  const double level = floor + 0.02 * (top - floor);
  std::vector<double> pos;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > level) {
      // parabolic vertex
      const double den = y[i - 1] - 2 * y[i] + y[i + 1];
      const double off = den != 0 ? 0.5 * (y[i - 1] - y[i + 1]) / den : 0.0;
      pos.push_back(tr.axis[i] + off * tr.axis.step);
    }
  est.maxima = pos.size();
  if (pos.size() < 4) {
    est.period = est.spectral_period;
    return est;
  }
  std::vector<double> gaps;
  for (std::size_t k = 1; k < pos.size(); ++k) gaps.push_back(pos[k] - pos[k - 1]);
  std::sort(gaps.begin(), gaps.end());
  const std::size_t g = gaps.size();
  est.period = g % 2 ? gaps[g / 2] : 0.5 * (gaps[g / 2 - 1] + gaps[g / 2]);
  if (est.spectral_period > 0)
    est.confidence = std::max(0.0, 1.0 - std::abs(est.period - est.spectral_period) / (0.25 * est.period));
  return est;
}

/// (peak - trough) / (peak + trough) with the global peak and the first local
/// minimum after it. 0 when no trough follows the peak.
inline double visibility(const ConditionalTrace& tr) {
  const auto& y = tr.values;
  if (y.size() < 3) return 0;
  const std::size_t ipk = std::size_t(std::max_element(y.begin(), y.end()) - y.begin());
  for (std::size_t j = ipk + 1; j + 1 < y.size(); ++j)
    if (y[j] <= y[j - 1] && y[j] < y[j + 1]) {
      const double s = y[ipk] + y[j];
      return s > 0 ? (y[ipk] - y[j]) / s : 0.0;
    }
  return 0;
}

/// [g3]^2 / ([g1_1]^2 [g1_2]^2 [g1_3]^2); above 1 certifies nonclassical correlation.
inline double cauchy_schwarz_factor(double g3_peak, const std::array<double, 3>& g1) {
  if (!(g3_peak > 0) || !(g1[0] > 0) || !(g1[1] > 0) || !(g1[2] > 0))
    throw InvalidParameter("Cauchy-Schwarz inputs must be > 0");
  const double d = g1[0] * g1[1] * g1[2];
  return (g3_peak * g3_peak) / (d * d);
}

}  // namespace triphoton
