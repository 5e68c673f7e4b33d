#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace triphoton {

/// Raised when a physical or numerical parameter is outside its allowed domain.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A Doppler integrand produced a non-finite sample or a pole sits on the real
/// velocity axis.
class NumericalDomainError : public std::domain_error {
 public:
  NumericalDomainError(const std::string& what, double velocity)
      : std::domain_error(what), velocity_(velocity) {}
  double velocity() const noexcept { return velocity_; }

 private:
  double velocity_;
};

/// 1 + Re(chi) dropped to zero or below, so the refractive index is undefined.
class DispersionDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A lookup fell outside the sampled range of a profile or grid.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// The spectral grid is too coarse for the requested time-delay range.
class SamplingError : public std::runtime_error {
 public:
  SamplingError(const std::string& what, std::size_t required_size)
      : std::runtime_error(what), required_size_(required_size) {}
  std::size_t required_size() const noexcept { return required_size_; }

 private:
  std::size_t required_size_;
};

/// The accidental floor cannot be separated from the correlation feature.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration file problem; carries the offending key and line number.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string key, int line)
      : std::runtime_error(format(what, key, line)), key_(std::move(key)), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& what, const std::string& key, int line) {
    std::string out = "config";
    if (line > 0) out += ":" + std::to_string(line);
    if (!key.empty()) out += " [" + key + "]";
    return out + ": " + what;
  }
  std::string key_;
  int line_;
};

}  // namespace triphoton
