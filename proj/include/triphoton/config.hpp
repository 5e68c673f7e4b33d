#pragma once

// Flat key = value configuration with unit suffixes. Frequencies in the file
// are linear (Hz .. GHz) and stored as rad/s; temperatures in C or K are
// stored in K. Unknown or repeated keys are errors.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "triphoton/coincidence.hpp"
#include "triphoton/correlation.hpp"
#include "triphoton/error.hpp"
#include "triphoton/eventsim.hpp"
#include "triphoton/physics.hpp"
#include "triphoton/quadrature.hpp"
#include "triphoton/susceptibility.hpp"

namespace triphoton {

struct AnalysisConfig {
  double window = 195e-9;
  double bin = 0.25e-9;
  double delay_offset = 150e-9;
  MatchMethod method = MatchMethod::direct;
  StopPolicy policy = StopPolicy::all_stops;
  bool signed_map = false;
  RatesOptions rates;
};

struct SimulationConfig {
  SourceConfig sources;
  bool calibrate = true;
  double target_triplets_per_min = 102;
  double target_accidentals_per_min = 6;
  double dual_pair_rate = 0.02;
  double dual_pair_delay = 5e-9;
  bool origin_tags = false;

  /// Source config with calibration and dual-pair settings applied.
  SourceConfig resolved(double window, std::uint64_t seed) const {
    SourceConfig s = sources;
    s.dual_pairs = sfwm_dual_pairs(dual_pair_rate, dual_pair_delay);
    s.seed = seed;
    if (calibrate) calibrate_rates(s, target_triplets_per_min, target_accidentals_per_min, window);
    return s;
  }
};

struct RunConfig {
  ExperimentParams physics = presets::fig_s2a();
  VelocityQuadrature quadrature;
  SpectralGridSpec spectral;
  TauGridSpec tau;
  GridSpec2D chi5_grid{ghz(-3.0), ghz(3.0), 256, ghz(-3.0), ghz(3.0), 256};
  double response_min = ghz(-3.0), response_max = ghz(3.0);
  std::size_t response_points = 1024;
  double trace_line = 50e-9;
  unsigned threads = 0;
  SimulationConfig simulation;
  AnalysisConfig analysis;
  std::uint64_t seed = 1;
  std::string output_dir = ".";
};

namespace detail {

enum class Unit { none, frequency, time, temperature, length, power, density, count_rate, rabi_coeff, text };

struct UnitScale {
  const char* name;
  double scale;
};

inline const std::vector<UnitScale>& unit_table(Unit u) {
  static const std::map<Unit, std::vector<UnitScale>> t{
      {Unit::frequency, {{"Hz", kTwoPi}, {"kHz", kTwoPi * 1e3}, {"MHz", kTwoPi * 1e6}, {"GHz", kTwoPi * 1e9}}},
      {Unit::time, {{"ps", 1e-12}, {"ns", 1e-9}, {"us", 1e-6}, {"ms", 1e-3}, {"s", 1.0}, {"min", 60.0}, {"h", 3600.0}}},
      {Unit::length, {{"mm", 1e-3}, {"cm", 1e-2}, {"m", 1.0}}},
      {Unit::power, {{"uW", 1e-6}, {"mW", 1e-3}, {"W", 1.0}}},
      {Unit::density, {{"m^-3", 1.0}, {"cm^-3", 1e6}}},
      {Unit::count_rate, {{"/s", 1.0}, {"/min", 1.0 / 60.0}, {"/h", 1.0 / 3600.0}}},
      {Unit::rabi_coeff, {{"MHz/sqrt(mW)", kTwoPi * 1e6 / std::sqrt(1e-3)}}},
  };
  static const std::vector<UnitScale> empty;
  auto it = t.find(u);
  return it == t.end() ? empty : it->second;
}

struct KeyDef {
  std::string name;
  Unit unit;
  std::string display_unit;  // used by print-defaults
  std::function<void(const std::string& text, double si, int line)> set;
  std::function<std::string()> get;
  std::string help;
};

inline std::string fmt(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.12g", v);
  return b;
}

inline double in_unit(double si, Unit u, const std::string& unit) {
  if (u == Unit::temperature) return unit == "C" ? si - kZeroCelsius : si;
  for (const auto& s : unit_table(u))
    if (unit == s.name) return si / s.scale;
  return si;
}

[[noreturn]] inline void bad(const std::string& what, const std::string& key, int line) {
  throw ConfigError(what, key, line);
}

}  // namespace detail

class ConfigSchema {
 public:
  explicit ConfigSchema(RunConfig& c) : c_(c) { build(); }

  const std::vector<detail::KeyDef>& keys() const { return keys_; }

  const detail::KeyDef* find(const std::string& name) const {
    for (const auto& k : keys_)
      if (k.name == name) return &k;
    return nullptr;
  }

  /// Applies one "value [unit]" string to a key.
  void apply(const std::string& key, const std::string& raw, int line) {
    const auto* k = find(key);
    if (!k) detail::bad("unknown key", key, line);
    std::istringstream is(raw);
    std::string value, unit, extra;
    is >> value;
    std::getline(is >> std::ws, unit);
    while (!unit.empty() && std::isspace(static_cast<unsigned char>(unit.back()))) unit.pop_back();
    if (value.empty()) detail::bad("missing value", key, line);
    double si = 0;
    if (k->unit != detail::Unit::none && k->unit != detail::Unit::text) {
      double x = 0;
      try {
        std::size_t used = 0;
        x = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        detail::bad("expected a number, got '" + value + "'", key, line);
      }
      if (unit.empty()) detail::bad("missing unit (expected " + k->display_unit + ")", key, line);
      if (k->unit == detail::Unit::temperature) {
        if (unit == "C")
          si = celsius(x);
        else if (unit == "K")
          si = x;
        else
          detail::bad("unknown temperature unit '" + unit + "'", key, line);
      } else {
        bool found = false;
        for (const auto& s : detail::unit_table(k->unit))
          if (unit == s.name) {
            si = x * s.scale;
            found = true;
          }
        if (!found) detail::bad("unknown unit '" + unit + "'", key, line);
      }
    } else if (!unit.empty()) {
      detail::bad("unexpected trailing text '" + unit + "'", key, line);
    }
    k->set(value, si, line);
    explicit_.insert(key);
  }

  bool is_set(const std::string& key) const { return explicit_.count(key) > 0; }

  /// Every key with its current value, one per line, parseable by parse_config.
  std::string dump(bool help = true) const {
    std::string s;
    for (const auto& k : keys_) {
      s += k.name + " = " + k.get();
      if (!k.display_unit.empty()) s += " " + k.display_unit;
      if (help && !k.help.empty()) s += "  # " + k.help;
      s += "\n";
    }
    return s;
  }

 private:
  using Unit = detail::Unit;

  void number(const std::string& name, Unit u, const std::string& disp, double& ref, double lo, double hi,
              std::string help = {}) {
    keys_.push_back({name, u, disp,
                     [&ref, name, lo, hi](const std::string& text, double si, int line) {
                       (void)text;
                       if (!(si >= lo && si <= hi)) detail::bad("value out of range", name, line);
                       ref = si;
                     },
                     [&ref, u, disp] {
                       const double v = detail::in_unit(ref, u, disp);
                       if (u != Unit::rabi_coeff) return detail::fmt(v);
                       char b[40];
                       std::snprintf(b, sizeof b, "%.17g", v);
                       return std::string(b);
                     }, std::move(help)});
  }

  void plain(const std::string& name, double& ref, double lo, double hi, std::string help = {}) {
    keys_.push_back({name, Unit::none, "",
                     [&ref, name, lo, hi](const std::string& text, double, int line) {
                       double v = 0;
                       try {
                         std::size_t used = 0;
                         v = std::stod(text, &used);
                         if (used != text.size()) throw std::invalid_argument(text);
                       } catch (const std::exception&) {
                         detail::bad("expected a number, got '" + text + "'", name, line);
                       }
                       if (!(v >= lo && v <= hi)) detail::bad("value out of range", name, line);
                       ref = v;
                     },
                     [&ref] { return detail::fmt(ref); }, std::move(help)});
  }

  template <class I>
  void integer(const std::string& name, I& ref, long long lo, long long hi, std::string help = {}) {
    keys_.push_back({name, Unit::none, "",
                     [&ref, name, lo, hi](const std::string& text, double, int line) {
                       long long v = 0;
                       try {
                         std::size_t used = 0;
                         v = std::stoll(text, &used);
                         if (used != text.size()) throw std::invalid_argument(text);
                       } catch (const std::exception&) {
                         detail::bad("expected an integer, got '" + text + "'", name, line);
                       }
                       if (v < lo || v > hi) detail::bad("value out of range", name, line);
                       ref = I(v);
                     },
                     [&ref] { return std::to_string(ref); }, std::move(help)});
  }

  void seed_key(const std::string& name, std::uint64_t& ref) {
    keys_.push_back({name, Unit::none, "",
                     [&ref, name](const std::string& text, double, int line) {
                       try {
                         std::size_t used = 0;
                         ref = std::stoull(text, &used);
                         if (used != text.size() || text[0] == '-') throw std::invalid_argument(text);
                       } catch (const std::exception&) {
                         detail::bad("expected an unsigned integer", name, line);
                       }
                     },
                     [&ref] { return std::to_string(ref); }, {}});
  }

  void flag(const std::string& name, bool& ref) {
    keys_.push_back({name, Unit::none, "",
                     [&ref, name](const std::string& text, double, int line) {
                       if (text == "true")
                         ref = true;
                       else if (text == "false")
                         ref = false;
                       else
                         detail::bad("expected true or false", name, line);
                     },
                     [&ref] { return std::string(ref ? "true" : "false"); }, {}});
  }

  template <class E>
  void choice(const std::string& name, E& ref, std::vector<std::pair<std::string, E>> options) {
    std::string help;
    for (const auto& o : options) help += (help.empty() ? "" : " | ") + o.first;
    keys_.push_back({name, Unit::none, "",
                     [&ref, name, options](const std::string& text, double, int line) {
                       for (const auto& o : options)
                         if (o.first == text) {
                           ref = o.second;
                           return;
                         }
                       detail::bad("unknown option '" + text + "'", name, line);
                     },
                     [&ref, options] {
                       for (const auto& o : options)
                         if (o.second == ref) return o.first;
                       return std::string("?");
                     },
                     help});
  }

  void text(const std::string& name, std::string& ref) {
    keys_.push_back({name, Unit::text, "",
                     [&ref](const std::string& t, double, int) { ref = t; }, [&ref] { return ref; }, {}});
  }

  void build() {
    auto& p = c_.physics;
    constexpr double inf = std::numeric_limits<double>::infinity();
    // physics
    number("temperature", Unit::temperature, "C", p.cell.temperature, 1.0, 2000.0);
    number("cell_length", Unit::length, "cm", p.cell.length, 1e-6, 10.0);
    number("density", Unit::density, "m^-3", p.cell.density, 1.0, 1e30);
    keys_.push_back({"od", Unit::none, "",
                     [this](const std::string& t, double, int line) {
                       if (t == "auto") {
                         od_.reset();
                         return;
                       }
                       try {
                         std::size_t used = 0;
                         const double v = std::stod(t, &used);
                         if (used != t.size() || !(v > 0)) throw std::invalid_argument(t);
                         od_ = v;
                       } catch (const std::exception&) {
                         detail::bad("expected a positive number", "od", line);
                       }
                     },
                     [this] { return od_ ? detail::fmt(*od_) : std::string("auto"); },
                     "auto = from density, or a value that sets density"});
    number("gamma31", Unit::frequency, "MHz", p.rates.gamma31, 0, inf);
    number("gamma41", Unit::frequency, "MHz", p.rates.gamma41, 0, inf);
    number("gamma21", Unit::frequency, "MHz", p.rates.gamma21, 0, inf);
    number("gamma11", Unit::frequency, "MHz", p.rates.gamma11, 0, inf);
    number("gamma22", Unit::frequency, "MHz", p.rates.gamma22, 0, inf);
    number("gamma42", Unit::frequency, "MHz", p.rates.gamma42, 0, inf);
    for (int j = 0; j < 3; ++j) number("delta" + std::to_string(j + 1), Unit::frequency, "MHz", p.drive.delta[j], -inf, inf);
    choice("rabi_source", rabi_from_power_, {{"power", true}, {"direct", false}});
    if (p.drive.power) power_ = *p.drive.power;
    for (int j = 0; j < 3; ++j) {
      const std::string n = std::to_string(j + 1);
      number("power" + n, Unit::power, "mW", power_[j], 0, 100.0);
      number("rabi_per_sqrt_power" + n, Unit::rabi_coeff, "MHz/sqrt(mW)", p.drive.power_to_rabi[j], 0, inf);
      number("omega" + n, Unit::frequency, "MHz", p.drive.omega[j], 0, inf, "derived from power unless rabi_source = direct");
    }
    plain("chi5_scale", p.dipoles.overall_scale_A, 1e-300, inf);
    choice("phase_convention", p.model.phase_convention,
           {{"si-eq-s8", PhaseConvention::si_eq_s8}, {"main-text", PhaseConvention::main_text}});
    choice("group_delay_mode", p.model.group_delay_mode,
           {{"local", GroupDelayMode::local}, {"central", GroupDelayMode::central}});
    // numerics
    choice("quadrature", c_.quadrature.scheme,
           {{"pole-expansion", QuadratureScheme::pole_expansion},
            {"gauss-hermite", QuadratureScheme::gauss_hermite},
            {"uniform-riemann", QuadratureScheme::uniform_riemann}});
    integer("quadrature_nodes", c_.quadrature.node_count, 8, 10000000);
    plain("quadrature_range", c_.quadrature.range_sigmas, 3, 50, "thermal widths");
    number("spectral_step", Unit::frequency, "MHz", c_.spectral.step, 1e-3, inf);
    choice("spectral_window", c_.spectral.auto_window, {{"auto", true}, {"manual", false}});
    number("spectral_delta2_min", Unit::frequency, "MHz", c_.spectral.lo2, -inf, inf);
    number("spectral_delta2_max", Unit::frequency, "MHz", c_.spectral.hi2, -inf, inf);
    number("spectral_delta3_min", Unit::frequency, "MHz", c_.spectral.lo3, -inf, inf);
    number("spectral_delta3_max", Unit::frequency, "MHz", c_.spectral.hi3, -inf, inf);
    plain("spectral_linewidths", c_.spectral.linewidths, 0, 1000);
    plain("spectral_v_sigmas", c_.spectral.v_sigmas, 0, 20);
    number("spectral_clip", Unit::frequency, "MHz", c_.spectral.clip, 0, inf);
    plain("taper_fraction", c_.spectral.taper_fraction, 0, 0.5);
    number("tau21_min", Unit::time, "ns", c_.tau.lo21, -1, 1);
    number("tau21_max", Unit::time, "ns", c_.tau.hi21, -1, 1);
    integer("tau21_points", c_.tau.n21, 2, 100000);
    number("tau31_min", Unit::time, "ns", c_.tau.lo31, -1, 1);
    number("tau31_max", Unit::time, "ns", c_.tau.hi31, -1, 1);
    integer("tau31_points", c_.tau.n31, 2, 100000);
    number("chi5_delta2_min", Unit::frequency, "MHz", c_.chi5_grid.lo1, -inf, inf);
    number("chi5_delta2_max", Unit::frequency, "MHz", c_.chi5_grid.hi1, -inf, inf);
    integer("chi5_delta2_points", c_.chi5_grid.n1, 2, 100000);
    number("chi5_delta3_min", Unit::frequency, "MHz", c_.chi5_grid.lo2, -inf, inf);
    number("chi5_delta3_max", Unit::frequency, "MHz", c_.chi5_grid.hi2, -inf, inf);
    integer("chi5_delta3_points", c_.chi5_grid.n2, 2, 100000);
    number("response_min", Unit::frequency, "MHz", c_.response_min, -inf, inf);
    number("response_max", Unit::frequency, "MHz", c_.response_max, -inf, inf);
    integer("response_points", c_.response_points, 64, 10000000);
    number("trace_line", Unit::time, "ns", c_.trace_line, -1, 1, "tau21 + tau31 for diag traces");
    integer("threads", c_.threads, 0, 4096, "0 = all cores");
    // simulation
    auto& s = c_.simulation;
    number("duration", Unit::time, "s", s.sources.duration, 1e-12, 1e6);
    flag("calibrate", s.calibrate);
    number("target_triplets", Unit::count_rate, "/min", s.target_triplets_per_min, 0, inf, "used when calibrate = true");
    number("target_accidentals", Unit::count_rate, "/min", s.target_accidentals_per_min, 0, inf,
           "used when calibrate = true");
    number("triplet_rate", Unit::count_rate, "/s", s.sources.triplet_rate, 0, inf, "emitted; calibrate = false");
    for (int c = 0; c < 3; ++c) {
      const std::string n = std::to_string(c + 1);
      number("singles_rate" + n, Unit::count_rate, "/s", s.sources.singles_rate[c], 0, inf, "calibrate = false");
      number("dark_rate" + n, Unit::count_rate, "/s", s.sources.dark_rate[c], 0, inf);
      plain("detector_efficiency" + n, s.sources.detector_efficiency[c], 0, 1);
    }
    number("dual_pair_rate", Unit::count_rate, "/s", s.dual_pair_rate, 0, inf, "per SFWM combination");
    number("dual_pair_delay", Unit::time, "ns", s.dual_pair_delay, 1e-15, 1);
    number("diagnose_rate", Unit::count_rate, "/s", s.sources.diagnose_rate, 0, inf);
    plain("fiber_coupling", s.sources.fiber_coupling, 0, 1);
    number("jitter_sigma", Unit::time, "ns", s.sources.jitter_sigma, 0, 1e-6);
    for (int c = 0; c < 4; ++c)
      number("dead_time" + std::to_string(c + 1), Unit::time, "ns", s.sources.dead_time[c], 0, 1);
    flag("origin_tags", s.origin_tags);
    // analysis
    auto& a = c_.analysis;
    number("window", Unit::time, "ns", a.window, 1e-12, 1e-3);
    number("bin", Unit::time, "ns", a.bin, 1e-12, 1e-3);
    number("delay_offset", Unit::time, "ns", a.delay_offset, 0, 1e-3);
    choice("method", a.method, {{"direct", MatchMethod::direct}, {"delayed", MatchMethod::delayed}});
    choice("stop_policy", a.policy, {{"all-stops", StopPolicy::all_stops}, {"first-stop", StopPolicy::first_stop}});
    flag("signed_map", a.signed_map);
    plain("floor_border", a.rates.floor.border_fraction, 0.01, 0.5);
    plain("floor_ridge_margin", a.rates.floor.ridge_margin, 0, 0.5);
    integer("floor_blocks", a.rates.floor.blocks_per_strip, 1, 1000);
    plain("floor_outlier_sigma", a.rates.floor.outlier_sigma, 0.5, 1000);
    for (int c = 0; c < 3; ++c) plain("g1_s" + std::to_string(c + 1), a.rates.g1[c], 1e-9, inf);
    number("peak_cell", Unit::time, "ns", a.rates.peak_cell, 1e-12, 1e-6);
    // run
    seed_key("seed", c_.seed);
    text("output_dir", c_.output_dir);
  }

 public:
  /// Resolves cross-key settings and validates the result.
  void finish() {
    auto& p = c_.physics;
    if (rabi_from_power_) {
      const auto given = p.drive.omega;
      p.drive.power = power_;
      p.drive.apply_powers();
      for (int j = 0; j < 3; ++j) {
        const std::string k = "omega" + std::to_string(j + 1);
        if (is_set(k) && std::abs(given[j] - p.drive.omega[j]) > 1e-6 * p.drive.omega[j])
          detail::bad("conflicts with the power setting; use rabi_source = direct", k, 0);
      }
    } else {
      p.drive.power.reset();
    }
    p.finalize();
    if (od_) {
      if (is_set("density") && is_set("od")) detail::bad("give either density or od, not both", "od", 0);
      p.cell.density = density_for_od(*od_, p.cell.temperature, p.cell.length, p.frame, p.dipoles);
      p.finalize();
    }
    try {
      p.validate();
      c_.quadrature.validate();
      c_.simulation.sources.validate();
    } catch (const InvalidParameter& e) {
      detail::bad(e.what(), "", 0);
    }
    if (!c_.spectral.auto_window && !(c_.spectral.hi2 > c_.spectral.lo2 && c_.spectral.hi3 > c_.spectral.lo3))
      detail::bad("manual spectral window must have max > min", "spectral_window", 0);
    if (!(c_.tau.hi21 > c_.tau.lo21) || !(c_.tau.hi31 > c_.tau.lo31)) detail::bad("tau max must exceed min", "tau", 0);
    if (!(c_.chi5_grid.hi1 > c_.chi5_grid.lo1) || !(c_.chi5_grid.hi2 > c_.chi5_grid.lo2))
      detail::bad("chi5 grid max must exceed min", "chi5", 0);
    if (!(c_.response_max > c_.response_min)) detail::bad("response_max must exceed response_min", "response", 0);
    if (c_.analysis.bin > c_.analysis.window) detail::bad("bin wider than window", "bin", 0);
  }

 private:
  RunConfig& c_;
  std::vector<detail::KeyDef> keys_;
  std::set<std::string> explicit_;
  bool rabi_from_power_ = true;
  std::array<double, 3> power_{4e-3, 40e-3, 15e-3};
  std::optional<double> od_;
};

/// Parses config text; `overrides` are applied after the file and may replace
/// keys it sets.
inline RunConfig parse_config_text(const std::string& text,
                                   const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  RunConfig c;
  ConfigSchema schema(c);
  std::istringstream in(text);
  std::string line;
  int n = 0;
  auto trim = [](std::string& s) {
    const auto a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
    s = a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) detail::bad("expected 'key = value'", "", n);
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    trim(key);
    trim(value);
    if (key.empty()) detail::bad("empty key", "", n);
    if (schema.is_set(key)) detail::bad("key given twice", key, n);
    schema.apply(key, value, n);
  }
  for (const auto& [k, v] : overrides) schema.apply(k, v, 0);
  schema.finish();
  return c;
}

/// Splits "5mW" or "5 mW" into "5 mW"; plain numbers pass through.
inline std::string spaced_quantity(const std::string& text) {
  std::size_t used = 0;
  try {
    (void)std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + text + "'", "", 0);
  }
  std::string unit = text.substr(used);
  const auto a = unit.find_first_not_of(' ');
  unit = a == std::string::npos ? std::string() : unit.substr(a);
  return unit.empty() ? text.substr(0, used) : text.substr(0, used) + " " + unit;
}

/// An empty path gives the defaults.
inline RunConfig parse_config(const std::string& path,
                              const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  if (path.empty()) return parse_config_text("", overrides);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path, "", 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), overrides);
}

inline std::string dump_config(RunConfig c, bool help = true) {
  ConfigSchema schema(c);
  return schema.dump(help);
}

/// "config: key = value" lines for output headers.
inline std::vector<std::string> config_header_lines(const RunConfig& c) {
  std::vector<std::string> out;
  std::istringstream in(dump_config(c, false));
  std::string line;
  while (std::getline(in, line)) out.push_back("config: " + line);
  return out;
}

}  // namespace triphoton
