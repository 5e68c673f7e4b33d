#pragma once

#include <numbers>

namespace triphoton {

/// CODATA 2018 values in SI units. Not configurable.
struct PhysicalConstants {
  static constexpr double c = 299792458.0;            // m/s
  static constexpr double hbar = 1.054571817e-34;     // J s
  static constexpr double kB = 1.380649e-23;          // J/K
  static constexpr double eps0 = 8.8541878128e-12;    // F/m
  static constexpr double amu = 1.66053906660e-27;    // kg
  static constexpr double mRb = 84.911789738 * amu;   // 85Rb, kg
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kZeroCelsius = 273.15;

// Linear frequency -> angular frequency helpers. Everything internal is rad/s.
constexpr double hz(double f) { return kTwoPi * f; }
constexpr double mhz(double f) { return kTwoPi * f * 1e6; }
constexpr double ghz(double f) { return kTwoPi * f * 1e9; }
constexpr double to_mhz(double omega) { return omega / (kTwoPi * 1e6); }

constexpr double celsius(double t) { return t + kZeroCelsius; }

}  // namespace triphoton
