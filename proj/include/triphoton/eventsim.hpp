#pragma once

// Time-tagged detection streams: SSWM triplets drawn from a correlation map
// plus uncorrelated singles, dual-pair SFWM contamination, dark counts and the
// channel-4 diagnose pulses.
//
// Every source owns a mt19937_64 seeded from (master seed, source label), so
// adding or removing a source leaves the others' draws untouched. Emission
// times are carried as integer picoseconds plus a fractional remainder.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "triphoton/correlation.hpp"
#include "triphoton/error.hpp"

namespace triphoton {

enum class Origin : std::uint8_t { none = 0, triplet = 1, single = 2, dual_pair = 3, dark = 4 };

inline const char* to_string(Origin o) {
  switch (o) {
    case Origin::triplet: return "triplet";
    case Origin::single: return "single";
    case Origin::dual_pair: return "dual-pair";
    case Origin::dark: return "dark";
    default: return "none";
  }
}

struct EventRecord {
  std::uint64_t timestamp_ps = 0;
  std::uint8_t channel = 0;  // 1..3 = S1..S3, 4 = diagnose
  Origin origin = Origin::none;

  friend bool operator<(const EventRecord& a, const EventRecord& b) {
    if (a.timestamp_ps != b.timestamp_ps) return a.timestamp_ps < b.timestamp_ps;
    if (a.channel != b.channel) return a.channel < b.channel;
    return a.origin < b.origin;
  }
  friend bool operator==(const EventRecord& a, const EventRecord& b) {
    return a.timestamp_ps == b.timestamp_ps && a.channel == b.channel && a.origin == b.origin;
  }
};

using EventStream = std::vector<EventRecord>;

/// Two biphotons emitted together; channel 0 marks a partner that is not collected.
struct DualPairSource {
  std::array<std::uint8_t, 2> pair_a{1, 2};
  std::array<std::uint8_t, 2> pair_b{3, 0};
  double rate = 0;              // 1/s
  double mean_delay = 5e-9;     // s, exponential intra-pair delay
  std::string label = "dual";
};

/// The 15 dual-biphoton combinations of seven SFWM processes. Each process is
/// mapped to the detection channels its photons leak into.
inline std::vector<DualPairSource> sfwm_dual_pairs(double rate_each, double mean_delay = 5e-9) {
  const std::array<std::array<std::uint8_t, 2>, 7> leak{{{1, 2}, {1, 3}, {2, 3}, {3, 2}, {1, 0}, {2, 0}, {3, 0}}};
  const std::array<std::array<int, 2>, 15> combos{{{1, 2}, {1, 3}, {1, 4}, {1, 5}, {1, 7}, {2, 3}, {2, 4}, {2, 6},
                                                   {3, 4}, {3, 5}, {3, 7}, {4, 5}, {4, 7}, {5, 6}, {6, 7}}};
  std::vector<DualPairSource> out;
  for (const auto& c : combos) {
    DualPairSource d;
    d.pair_a = leak[c[0] - 1];
    d.pair_b = leak[c[1] - 1];
    d.rate = rate_each;
    d.mean_delay = mean_delay;
    d.label = "dual/sfwm" + std::to_string(c[0]) + "+sfwm" + std::to_string(c[1]);
    out.push_back(d);
  }
  return out;
}

struct SourceConfig {
  double triplet_rate = 77.45;                         // emitted triplets per second
  std::array<double, 3> singles_rate{49300, 49300, 49300};  // photons/s reaching each fiber
  std::vector<DualPairSource> dual_pairs = sfwm_dual_pairs(0.02);
  std::array<double, 3> dark_rate{100, 100, 100};      // detector clicks/s
  double diagnose_rate = 0;                            // channel-4 pulses/s
  std::array<double, 3> detector_efficiency{0.4, 0.4, 0.4};
  double fiber_coupling = 0.7;
  double jitter_sigma = 0.3e-9;
  std::array<double, 4> dead_time{0, 0, 0, 0};  // s
  double duration = 60;                          // s
  std::uint64_t seed = 1;

  double survival(int ch) const { return detector_efficiency[ch - 1] * fiber_coupling; }

  void validate() const {
    auto nonneg = [](double x, const char* what) {
      if (!(x >= 0) || !std::isfinite(x)) throw InvalidParameter(std::string(what) + " must be >= 0");
    };
    nonneg(triplet_rate, "triplet_rate");
    nonneg(diagnose_rate, "diagnose_rate");
    nonneg(jitter_sigma, "jitter_sigma");
    for (int c = 0; c < 3; ++c) {
      nonneg(singles_rate[c], "singles_rate");
      nonneg(dark_rate[c], "dark_rate");
      if (!(detector_efficiency[c] >= 0 && detector_efficiency[c] <= 1))
        throw InvalidParameter("detector_efficiency must be in [0, 1]");
    }
    for (double d : dead_time) nonneg(d, "dead_time");
    if (!(fiber_coupling >= 0 && fiber_coupling <= 1)) throw InvalidParameter("fiber_coupling must be in [0, 1]");
    for (const auto& d : dual_pairs) {
      nonneg(d.rate, "dual-pair rate");
      if (!(d.mean_delay > 0)) throw InvalidParameter("dual-pair mean_delay must be > 0");
      for (auto ch : {d.pair_a[0], d.pair_a[1], d.pair_b[0], d.pair_b[1]})
        if (ch > 3) throw InvalidParameter("dual-pair channels must be 0..3");
    }
    if (!(duration > 0) || !std::isfinite(duration)) throw InvalidParameter("duration must be > 0");
    if (duration * 1e12 > 9e18) throw InvalidParameter("duration does not fit in 64-bit picoseconds");
  }

  /// Detected three-fold rate (1/s) of complete triplets.
  double detected_triplet_rate() const { return triplet_rate * survival(1) * survival(2) * survival(3); }
  double detected_singles(int ch) const { return singles_rate[ch - 1] * survival(ch) + dark_rate[ch - 1]; }
};

/// Sets the emitted triplet rate and equal per-channel singles so that complete
/// detected triplets arrive at `triplets_per_min` and uncorrelated three-fold
/// accidentals of the all-stop matcher (r1 r2 r3 W^2) at `accidentals_per_min`.
inline void calibrate_rates(SourceConfig& cfg, double triplets_per_min, double accidentals_per_min, double window) {
  const double s = cfg.survival(1) * cfg.survival(2) * cfg.survival(3);
  if (!(s > 0)) throw InvalidParameter("calibration needs non-zero detection efficiency");
  cfg.triplet_rate = triplets_per_min / 60.0 / s;
  const double r = std::cbrt(accidentals_per_min / 60.0 / (window * window));
  for (int c = 1; c <= 3; ++c) {
    const double raw = (r - cfg.dark_rate[c - 1]) / cfg.survival(c);
    if (!(raw >= 0)) throw InvalidParameter("dark rate alone exceeds the accidental target");
    cfg.singles_rate[c - 1] = raw;
  }
}

namespace detail {

inline std::uint32_t fnv1a32(const std::string& s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

inline std::mt19937_64 labelled_engine(std::uint64_t seed, const std::string& label) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), fnv1a32(label), std::uint32_t(label.size())};
  return std::mt19937_64(seq);
}

/// Integer picoseconds plus a fractional remainder in [0, 1).
struct PsTime {
  std::int64_t ps = 0;
  double frac = 0;

  void advance(double dt_ps) {
    const double whole = std::floor(dt_ps);
    ps += std::int64_t(whole);
    frac += dt_ps - whole;
    if (frac >= 1.0) {
      frac -= 1.0;
      ps += 1;
    }
  }
  std::int64_t offset(double dt_ps) const { return ps + std::llround(frac + dt_ps); }
};

}  // namespace detail

/// Draws (tau21, tau31) proportional to r3 with uniform spread inside the cell.
class TripletSampler {
 public:
  explicit TripletSampler(const CorrelationMap& map) : r1_(map.r3.axis1), r2_(map.r3.axis2) {
    double mass = 0;
    for (double v : map.r3.values) {
      if (!(v >= 0) || !std::isfinite(v)) throw InvalidParameter("correlation map must be finite and >= 0");
      mass += v;
    }
    if (!(mass > 0)) throw InvalidParameter("correlation map has zero mass");
    dist_ = std::discrete_distribution<std::size_t>(map.r3.values.begin(), map.r3.values.end());
  }

  template <class Rng>
  std::array<double, 2> operator()(Rng& rng) {
    const std::size_t k = dist_(rng);
    const std::size_t i = k / r2_.size, j = k % r2_.size;
    const double u1 = std::generate_canonical<double, 53>(rng) - 0.5;
    const double u2 = std::generate_canonical<double, 53>(rng) - 0.5;
    return {r1_[i] + u1 * r1_.step, r2_[j] + u2 * r2_.step};
  }

  double min_delay() const {
    return std::min({0.0, r1_.start - 0.5 * r1_.step, r2_.start - 0.5 * r2_.step});
  }

 private:
  Axis r1_, r2_;
  std::discrete_distribution<std::size_t> dist_;
};

template <class Rng>
std::array<double, 2> sample_triplet_delays(TripletSampler& sampler, Rng& rng) {
  return sampler(rng);
}

struct GeneratorStats {
  std::array<std::uint64_t, 5> channel_counts{};  // index = channel
  std::array<std::uint64_t, 5> origin_counts{};   // index = Origin
  std::uint64_t triplets_emitted = 0;
  std::uint64_t triplets_detected = 0;  // all three clicks kept
  std::vector<std::array<std::int64_t, 2>> triplet_delays_ps;  // (tau21, tau31) of detected triplets
};

/// Generates the stream chunk by chunk. Output order and content do not depend
/// on the chunk length.
class StreamGenerator {
 public:
  StreamGenerator(const CorrelationMap* map, SourceConfig cfg, bool channels_1_to_3 = true, bool channel_4 = true)
      : cfg_(std::move(cfg)) {
    cfg_.validate();
    duration_ps_ = std::int64_t(std::llround(cfg_.duration * 1e12));
    jitter_clip_ps_ = 8.0 * cfg_.jitter_sigma * 1e12;
    if (channels_1_to_3) {
      if (cfg_.triplet_rate > 0) {
        if (!map) throw InvalidParameter("triplet sources need a correlation map");
        sampler_ = std::make_unique<TripletSampler>(*map);
        min_offset_ps_ = sampler_->min_delay() * 1e12;
        add(Kind::triplet, "triplet", cfg_.triplet_rate, 0);
      }
      for (int c = 1; c <= 3; ++c) {
        add(Kind::single, "single/" + std::to_string(c), cfg_.singles_rate[c - 1] * cfg_.survival(c), c);
        add(Kind::dark, "dark/" + std::to_string(c), cfg_.dark_rate[c - 1], c);
      }
      for (std::size_t k = 0; k < cfg_.dual_pairs.size(); ++k) {
        add(Kind::dual, cfg_.dual_pairs[k].label + "/" + std::to_string(k), cfg_.dual_pairs[k].rate, 0);
        sources_.back().dual = k;
      }
    }
    if (channel_4) add(Kind::diagnose, "diagnose", cfg_.diagnose_rate, 4);
    last_kept_.fill(std::numeric_limits<std::int64_t>::min());
  }

  const SourceConfig& config() const { return cfg_; }
  const GeneratorStats& stats() const { return stats_; }
  bool done() const { return done_; }

  /// Appends the next block of events (covering about `chunk` seconds).
  /// Returns false once the whole duration has been emitted.
  bool next_chunk(EventStream& out, double chunk = 1.0) {
    if (done_) return false;
    horizon_ps_ = std::min<std::int64_t>(duration_ps_, horizon_ps_ + std::max<std::int64_t>(1, std::llround(chunk * 1e12)));
    double next_min = std::numeric_limits<double>::infinity();
    for (auto& s : sources_) {
      while (s.rate > 0 && s.t.ps < horizon_ps_) {
        emit(s);
        s.t.advance(s.exp(s.rng) / s.rate * 1e12);
      }
      if (s.rate > 0 && s.t.ps < duration_ps_) next_min = std::min(next_min, double(s.t.ps));
    }
    std::sort(pending_.begin(), pending_.end());
    std::size_t keep = pending_.size();
    if (std::isfinite(next_min)) {
      const double bound = next_min + min_offset_ps_ - jitter_clip_ps_ - 2.0;
      keep = std::size_t(std::lower_bound(pending_.begin(), pending_.end(), bound,
                                          [](const Pending& p, double b) { return double(p.ev.timestamp_ps) < b; }) -
                         pending_.begin());
    } else {
      done_ = true;
    }
    for (std::size_t k = 0; k < keep; ++k) finalize(pending_[k], out);
    pending_.erase(pending_.begin(), pending_.begin() + std::ptrdiff_t(keep));
    return true;
  }

 private:
  enum class Kind { triplet, single, dark, dual, diagnose };

  struct Source {
    Kind kind;
    double rate;
    int channel;
    std::size_t dual = 0;
    std::mt19937_64 rng;
    std::exponential_distribution<double> exp{1.0};
    std::normal_distribution<double> gauss{0.0, 1.0};
    detail::PsTime t;
  };

  struct Pending {
    EventRecord ev;
    friend bool operator<(const Pending& a, const Pending& b) { return a.ev < b.ev; }
  };

  void add(Kind k, const std::string& label, double rate, int ch) {
    Source s{k, rate, ch, 0, detail::labelled_engine(cfg_.seed, label), {}, {}, {}};
    if (rate > 0) s.t.advance(s.exp(s.rng) / rate * 1e12);
    sources_.push_back(std::move(s));
  }

  double jitter_ps(Source& s) {
    if (cfg_.jitter_sigma == 0) return 0;
    return std::clamp(s.gauss(s.rng), -8.0, 8.0) * cfg_.jitter_sigma * 1e12;
  }

  // Returns false when the click is lost to efficiency or falls outside the acquisition.
  bool push(Source& s, int ch, double offset_ps, Origin o, std::int64_t* when = nullptr) {
    if (std::generate_canonical<double, 53>(s.rng) >= cfg_.survival(ch)) return false;
    const std::int64_t t = s.t.offset(offset_ps + jitter_ps(s));
    if (when) *when = t;
    if (t < 0 || t >= duration_ps_) return false;
    pending_.push_back({{std::uint64_t(t), std::uint8_t(ch), o}});
    return true;
  }

  void emit(Source& s) {
    switch (s.kind) {
      case Kind::single: pending_.push_back({{std::uint64_t(s.t.ps), std::uint8_t(s.channel), Origin::single}}); break;
      case Kind::dark: pending_.push_back({{std::uint64_t(s.t.ps), std::uint8_t(s.channel), Origin::dark}}); break;
      case Kind::diagnose: pending_.push_back({{std::uint64_t(s.t.ps), 4, Origin::single}}); break;
      case Kind::triplet: {
        const auto tau = (*sampler_)(s.rng);
        ++stats_.triplets_emitted;
        std::array<std::int64_t, 3> t{};
        const bool k1 = push(s, 1, 0.0, Origin::triplet, &t[0]);
        const bool k2 = push(s, 2, tau[0] * 1e12, Origin::triplet, &t[1]);
        const bool k3 = push(s, 3, tau[1] * 1e12, Origin::triplet, &t[2]);
        if (k1 && k2 && k3) {
          ++stats_.triplets_detected;
          stats_.triplet_delays_ps.push_back({t[1] - t[0], t[2] - t[0]});
        }
        break;
      }
      case Kind::dual: {
        const auto& d = cfg_.dual_pairs[s.dual];
        for (const auto& pr : {d.pair_a, d.pair_b}) {
          const double delay = s.exp(s.rng) * d.mean_delay * 1e12;
          if (pr[0]) push(s, pr[0], 0.0, Origin::dual_pair);
          if (pr[1]) push(s, pr[1], delay, Origin::dual_pair);
        }
        break;
      }
    }
  }

  void finalize(const Pending& p, EventStream& out) {
    const int ch = p.ev.channel;
    const std::int64_t t = std::int64_t(p.ev.timestamp_ps);
    const std::int64_t dead = std::llround(cfg_.dead_time[ch - 1] * 1e12);
    if (dead > 0 && last_kept_[ch] != std::numeric_limits<std::int64_t>::min() && t - last_kept_[ch] < dead) return;
    last_kept_[ch] = t;
    ++stats_.channel_counts[ch];
    ++stats_.origin_counts[std::size_t(p.ev.origin)];
    out.push_back(p.ev);
  }

  SourceConfig cfg_;
  std::unique_ptr<TripletSampler> sampler_;
  std::vector<Source> sources_;
  std::vector<Pending> pending_;
  std::array<std::int64_t, 5> last_kept_{};
  GeneratorStats stats_;
  std::int64_t duration_ps_ = 0, horizon_ps_ = 0;
  double jitter_clip_ps_ = 0, min_offset_ps_ = 0;
  bool done_ = false;
};

inline EventStream generate_stream(const CorrelationMap& map, const SourceConfig& cfg, GeneratorStats* stats = nullptr) {
  StreamGenerator g(&map, cfg);
  EventStream out;
  while (g.next_chunk(out)) {
  }
  if (stats) *stats = g.stats();
  return out;
}

/// Noise-only stream; the config must have triplet_rate == 0.
inline EventStream generate_stream(const SourceConfig& cfg, GeneratorStats* stats = nullptr) {
  StreamGenerator g(nullptr, cfg);
  EventStream out;
  while (g.next_chunk(out)) {
  }
  if (stats) *stats = g.stats();
  return out;
}

/// The channel-4 pulses alone. They match the channel-4 part of generate_stream
/// for the same config.
inline EventStream diagnose_stream(const SourceConfig& cfg) {
  StreamGenerator g(nullptr, cfg, false, true);
  EventStream out;
  while (g.next_chunk(out)) {
  }
  return out;
}

inline EventStream strip_origin(EventStream s) {
  for (auto& e : s) e.origin = Origin::none;
  return s;
}

}  // namespace triphoton
