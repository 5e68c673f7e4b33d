#pragma once

// Physical configuration of the four-level 85Rb system, Doppler kinematics and
// the dressed-state resonance analysis of the fifth-order susceptibility.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "triphoton/constants.hpp"
#include "triphoton/error.hpp"

namespace triphoton {

enum class PhaseConvention { si_eq_s8, main_text };
enum class GroupDelayMode { local, central };

inline const char* to_string(PhaseConvention p) {
  return p == PhaseConvention::si_eq_s8 ? "si-eq-s8" : "main-text";
}
inline const char* to_string(GroupDelayMode g) {
  return g == GroupDelayMode::local ? "local" : "central";
}

struct VaporCell {
  double temperature = celsius(80.0);  // K
  double length = 0.07;                // m
  double density = 1.2e17;             // atoms / m^3
  double od = 0.0;                     // derived, kept in sync by finalize()

  void validate() const {
    if (!(temperature > 0)) throw InvalidParameter("cell temperature must be > 0 K");
    if (!(length > 0)) throw InvalidParameter("cell length must be > 0");
    if (!(density > 0)) throw InvalidParameter("atomic density must be > 0");
  }
};

struct DecayRates {
  double gamma31 = mhz(6.0);
  double gamma41 = mhz(6.0);
  double gamma21 = 0.2 * mhz(6.0);
  double gamma11 = 0.4 * mhz(6.0);
  double gamma22 = 0.4 * mhz(6.0);
  double gamma42 = mhz(6.0);

  void validate() const {
    for (double g : {gamma31, gamma41, gamma21, gamma11, gamma22, gamma42})
      if (!(g >= 0)) throw InvalidParameter("decay rates must be >= 0");
    if (!(gamma31 > 0) || !(gamma41 > 0))
      throw InvalidParameter("gamma31 and gamma41 must be > 0");
  }
};

struct DriveFields {
  std::array<double, 3> delta{ghz(-2.0), mhz(-150.0), mhz(50.0)};  // rad/s
  std::array<double, 3> omega{mhz(300.0), mhz(870.0), mhz(533.0)};  // rad/s
  // Input powers (W). When present they are authoritative and omega is derived.
  std::optional<std::array<double, 3>> power{std::array<double, 3>{4e-3, 40e-3, 15e-3}};
  // rad/s per sqrt(W), back-fitted from (40 mW, 870 MHz), (15 mW, 533 MHz), (4 mW, 300 MHz).
  std::array<double, 3> power_to_rabi{mhz(300.0) / std::sqrt(4e-3), mhz(870.0) / std::sqrt(40e-3),
                                      mhz(533.0) / std::sqrt(15e-3)};

  /// Recomputes the Rabi frequencies from the powers, if powers are set.
  void apply_powers() {
    if (!power) return;
    for (int j = 0; j < 3; ++j) omega[j] = power_to_rabi[j] * std::sqrt((*power)[j]);
  }

  void validate() const {
    for (double o : omega)
      if (!(o >= 0)) throw InvalidParameter("Rabi frequencies must be >= 0");
    for (double d : delta)
      if (!std::isfinite(d)) throw InvalidParameter("detunings must be finite");
    if (power) {
      for (int j = 0; j < 3; ++j) {
        if (!((*power)[j] >= 0)) throw InvalidParameter("powers must be >= 0");
        double expect = power_to_rabi[j] * std::sqrt((*power)[j]);
        if (std::abs(expect - omega[j]) > 1e-9 * std::max(1.0, expect))
          throw InvalidParameter("Rabi frequency inconsistent with power; call apply_powers()");
      }
    }
  }
};

enum FieldIndex : int { kE1 = 0, kE2 = 1, kE3 = 2, kS1 = 3, kS2 = 4, kS3 = 5 };

/// Transition frequencies, central wavenumbers and the phase-mismatch sign
/// pattern. Built from the drive detunings; see SpectralFrame::build.
struct SpectralFrame {
  double omega31 = 0, omega41 = 0, omega42 = 0;       // rad/s
  std::array<double, 6> omega_central{};             // rad/s, indexed by FieldIndex
  std::array<double, 6> kbar{};                      // rad/m, |k| at central frequency
  std::array<int, 6> mismatch_sign{};                // coefficient of k_j in delta-k

  double lambda(int field) const { return kTwoPi * PhysicalConstants::c / omega_central[field]; }
  double k42() const { return omega42 / PhysicalConstants::c; }
  double k31() const { return omega31 / PhysicalConstants::c; }

  static constexpr double kLambda31 = 795e-9;
  static constexpr double kLambda42 = 780e-9;
  static constexpr double kGroundSplitting = 3.035732439e9;  // Hz, 85Rb 5S1/2 F=2..3

  static SpectralFrame build(const DriveFields& drive, PhaseConvention convention) {
    constexpr double c = PhysicalConstants::c;
    SpectralFrame f;
    f.omega31 = kTwoPi * c / kLambda31;
    f.omega42 = kTwoPi * c / kLambda42;
    f.omega41 = f.omega42 + hz(kGroundSplitting);
    f.omega_central[kE1] = f.omega31 - drive.delta[0];
    f.omega_central[kE2] = f.omega42 - drive.delta[1];
    f.omega_central[kE3] = f.omega42 - drive.delta[2];
    f.omega_central[kS2] = f.omega42;
    f.omega_central[kS3] = f.omega41;
    f.omega_central[kS1] = f.omega_central[kE1] + f.omega_central[kE2] + f.omega_central[kE3] -
                           f.omega_central[kS2] - f.omega_central[kS3];
    if (convention == PhaseConvention::si_eq_s8)
      f.mismatch_sign = {-1, +1, -1, +1, -1, +1};
    else
      f.mismatch_sign = {-1, -1, -1, +1, +1, +1};
    for (int j = 0; j < 6; ++j) f.kbar[j] = f.omega_central[j] / c;
    // Line-centre phase matching: the S1 collection angle absorbs the residual.
    double residual = 0;
    for (int j = 0; j < 6; ++j)
      if (j != kS1) residual += f.mismatch_sign[j] * f.kbar[j];
    f.kbar[kS1] = -residual / f.mismatch_sign[kS1];
    return f;
  }

  /// Wavevector mismatch of the central wavenumbers alone; zero by construction.
  double central_mismatch() const {
    double dk = 0;
    for (int j = 0; j < 6; ++j) dk += mismatch_sign[j] * kbar[j];
    return dk;
  }
};

/// Spectral offsets of the emitted photons. delta_s1 is always derived so that
/// the three offsets sum to zero.
class DetuningOffsets {
 public:
  DetuningOffsets(double delta_s2, double delta_s3) : d2_(delta_s2), d3_(delta_s3) {}
  double delta_s1() const { return -(d2_ + d3_); }
  double delta_s2() const { return d2_; }
  double delta_s3() const { return d3_; }

 private:
  double d2_, d3_;
};

struct ModelOptions {
  PhaseConvention phase_convention = PhaseConvention::si_eq_s8;
  GroupDelayMode group_delay_mode = GroupDelayMode::local;
};

// ---------------------------------------------------------------------------
// Closed-form kinematics

/// Maxwell-Boltzmann 1-D velocity density (s/m).
inline double maxwell_boltzmann_pdf(double v, double temperature) {
  if (!(temperature > 0)) throw InvalidParameter("temperature must be > 0 K");
  const double m = PhysicalConstants::mRb;
  const double a = m / (2.0 * PhysicalConstants::kB * temperature);
  return std::sqrt(a / kPi) * std::exp(-a * v * v);
}

/// 1-sigma width sqrt(kB T / m) of the velocity distribution (m/s).
inline double thermal_velocity(double temperature) {
  if (!(temperature > 0)) throw InvalidParameter("temperature must be > 0 K");
  return std::sqrt(PhysicalConstants::kB * temperature / PhysicalConstants::mRb);
}

/// FWHM Doppler width of the 780-nm line (rad/s).
inline double doppler_width(double temperature, const SpectralFrame& frame) {
  return frame.k42() * std::sqrt(8.0 * std::log(2.0)) * thermal_velocity(temperature);
}

struct DopplerDetunings {
  double d1, d2, d3;
};

inline DopplerDetunings doppler_detunings(double v, const DriveFields& drive, const SpectralFrame& frame) {
  const double c = PhysicalConstants::c;
  return {drive.delta[0] + v * frame.omega31 / c, drive.delta[1] - v * frame.omega42 / c,
          drive.delta[2] + v * frame.omega42 / c};
}

/// Omega_E = sqrt(delta_D^2 + 4|Omega|^2 + 4 Gamma_a Gamma_b).
inline double effective_rabi(double delta_d, double omega, double gamma_a, double gamma_b) {
  if (gamma_a < 0 || gamma_b < 0) throw InvalidParameter("linewidths must be >= 0");
  return std::sqrt(delta_d * delta_d + 4.0 * omega * omega + 4.0 * gamma_a * gamma_b);
}

// ---------------------------------------------------------------------------
// Optical depth. The on-resonance cross-section is
//   sigma41 = omega41 |mu14|^2 / (2 eps0 hbar c Delta_D)
// with the dipole calibrated once so that N = 1.2e11 cm^-3, T = 80 C, L = 7 cm
// gives OD = 4.6.

struct OdCalibration {
  static constexpr double density = 1.2e17;
  static constexpr double temperature = kZeroCelsius + 80.0;
  static constexpr double length = 0.07;
  static constexpr double od = 4.6;
};

inline double cross_section_41(double temperature, const SpectralFrame& frame, double mu14) {
  constexpr double k = 2.0 * PhysicalConstants::eps0 * PhysicalConstants::hbar * PhysicalConstants::c;
  return frame.omega41 * mu14 * mu14 / (k * doppler_width(temperature, frame));
}

/// Dipole moment (C m) reproducing the calibration optical depth.
inline double calibrated_dipole(const SpectralFrame& frame) {
  constexpr double k = 2.0 * PhysicalConstants::eps0 * PhysicalConstants::hbar * PhysicalConstants::c;
  const double sigma = OdCalibration::od / (OdCalibration::density * OdCalibration::length);
  return std::sqrt(sigma * k * doppler_width(OdCalibration::temperature, frame) / frame.omega41);
}

struct DipoleMoments {
  double mu13 = 0, mu24 = 0, mu23 = 0, mu14 = 0;  // C m
  double overall_scale_A = 1.0;

  static DipoleMoments nominal(const SpectralFrame& frame) {
    double mu = calibrated_dipole(frame);
    return {mu, mu, mu, mu, 1.0};
  }
  void validate() const {
    for (double m : {mu13, mu24, mu23, mu14})
      if (!(m > 0)) throw InvalidParameter("dipole moments must be > 0");
    if (!(overall_scale_A > 0)) throw InvalidParameter("overall scale must be > 0");
  }
};

inline double optical_depth(const VaporCell& cell, const SpectralFrame& frame, const DipoleMoments& dip) {
  cell.validate();
  return cell.density * cross_section_41(cell.temperature, frame, dip.mu14) * cell.length;
}

/// Density that yields the requested optical depth (used for the 115 C set, where
/// only the OD is known).
inline double density_for_od(double od, double temperature, double length, const SpectralFrame& frame,
                             const DipoleMoments& dip) {
  if (!(od > 0)) throw InvalidParameter("optical depth must be > 0");
  return od / (cross_section_41(temperature, frame, dip.mu14) * length);
}

// ---------------------------------------------------------------------------

struct ExperimentParams {
  VaporCell cell;
  DecayRates rates;
  DriveFields drive;
  DipoleMoments dipoles;
  ModelOptions model;
  SpectralFrame frame;

  /// Rebuilds every derived quantity (frame, Rabi frequencies, OD). Call after
  /// editing inputs.
  ExperimentParams& finalize() {
    drive.apply_powers();
    frame = SpectralFrame::build(drive, model.phase_convention);
    if (!(dipoles.mu14 > 0)) dipoles = DipoleMoments::nominal(frame);
    cell.od = optical_depth(cell, frame, dipoles);
    return *this;
  }

  void validate() const {
    cell.validate();
    rates.validate();
    drive.validate();
    dipoles.validate();
    double od = optical_depth(cell, frame, dipoles);
    if (std::abs(od - cell.od) > 1e-9 * od) throw InvalidParameter("cell OD is stale; call finalize()");
  }

  double thermal_velocity() const { return triphoton::thermal_velocity(cell.temperature); }

  /// Canonical text dump of every input; the basis of the parameter hash.
  std::string canonical() const {
    std::string s;
    char buf[192];
    auto put = [&](const char* k, double v) {
      std::snprintf(buf, sizeof buf, "%s=%.17g\n", k, v);
      s += buf;
    };
    put("temperature", cell.temperature);
    put("length", cell.length);
    put("density", cell.density);
    put("gamma31", rates.gamma31);
    put("gamma41", rates.gamma41);
    put("gamma21", rates.gamma21);
    put("gamma11", rates.gamma11);
    put("gamma22", rates.gamma22);
    put("gamma42", rates.gamma42);
    for (int j = 0; j < 3; ++j) {
      std::snprintf(buf, sizeof buf, "delta%d", j + 1);
      put(buf, drive.delta[j]);
      std::snprintf(buf, sizeof buf, "omega%d", j + 1);
      put(buf, drive.omega[j]);
    }
    put("mu13", dipoles.mu13);
    put("mu24", dipoles.mu24);
    put("mu23", dipoles.mu23);
    put("mu14", dipoles.mu14);
    put("scale_A", dipoles.overall_scale_A);
    s += std::string("phase_convention=") + to_string(model.phase_convention) + "\n";
    s += std::string("group_delay_mode=") + to_string(model.group_delay_mode) + "\n";
    return s;
  }

  std::string hash() const {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char ch : canonical()) {
      h ^= ch;
      h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

namespace presets {

/// Low-OD damped-Rabi configuration: 80 C, OD 4.6, P = (4, 40, 15) mW.
inline ExperimentParams fig_s2a() {
  ExperimentParams p;
  p.finalize();
  return p;
}

/// As fig_s2a with the E2 field reduced to 15 mW (Omega2 = 533 MHz).
inline ExperimentParams fig_s2b() {
  ExperimentParams p;
  (*p.drive.power)[1] = 15e-3;
  p.drive.power_to_rabi[1] = mhz(533.0) / std::sqrt(15e-3);
  p.finalize();
  return p;
}

/// As fig_s2b at 115 C with OD 45.7; the density is back-solved from the OD.
inline ExperimentParams fig_s2c() {
  ExperimentParams p = fig_s2b();
  p.cell.temperature = celsius(115.0);
  p.cell.density = density_for_od(45.7, p.cell.temperature, p.cell.length, p.frame, p.dipoles);
  p.finalize();
  return p;
}

}  // namespace presets

// ---------------------------------------------------------------------------
// Dressed-state resonances

struct ResonanceSet {
  std::array<double, 2> centers_d1{};  // delta1+, delta1-
  std::array<double, 4> centers_d2{};  // sorted ascending
  std::array<double, 2> centers_d3{};  // delta3+, delta3-
  // Unsorted delta2 centres indexed by the signs of (Omega_E2, Omega_E3) in the
  // delta2 formula: [++, +-, -+, --]. The E3 sign enters delta2 and delta3 with
  // opposite signs, so branch b coexists with centers_d3[1 - b % 2].
  std::array<double, 4> d2_by_branch{};
  double eff_rabi_E2 = 0, eff_rabi_E3 = 0;
  double linewidth_d2 = 0, linewidth_d3 = 0;
};

inline ResonanceSet resonance_set(const ExperimentParams& p, double v) {
  const double c = PhysicalConstants::c;
  if (!(std::abs(v) < c)) throw InvalidParameter("|v| must be below c");
  const auto dd = doppler_detunings(v, p.drive, p.frame);
  const auto& r = p.rates;
  ResonanceSet s;
  s.eff_rabi_E2 = effective_rabi(dd.d2, p.drive.omega[1], r.gamma21, r.gamma41);
  s.eff_rabi_E3 = effective_rabi(dd.d3, p.drive.omega[2], r.gamma11, r.gamma41);
  const double e2 = s.eff_rabi_E2, e3 = s.eff_rabi_E3;
  const double wm = 1.0 - v / c, wp = 1.0 + v / c;
  s.centers_d1 = {(dd.d2 + e2) / (2 * wm), (dd.d2 - e2) / (2 * wm)};
  s.centers_d3 = {(-dd.d3 + e3) / (2 * wm), (-dd.d3 - e3) / (2 * wm)};
  const double base = dd.d3 - dd.d2;
  s.d2_by_branch = {(base + e2 + e3) / (2 * wp), (base + e2 - e3) / (2 * wp), (base - e2 + e3) / (2 * wp),
                    (base - e2 - e3) / (2 * wp)};
  s.centers_d2 = s.d2_by_branch;
  std::sort(s.centers_d2.begin(), s.centers_d2.end());
  s.linewidth_d2 = (r.gamma21 + r.gamma41) / 2 + r.gamma21 * dd.d2 / (dd.d2 + e2);
  s.linewidth_d3 = (r.gamma11 + r.gamma41) / 2 + r.gamma11 * dd.d3 / (dd.d3 + e3);
  return s;
}

}  // namespace triphoton
