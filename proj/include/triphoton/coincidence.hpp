#pragma once

// Start-stop coincidence counting on time-sorted event streams. All delays are
// integer picoseconds, binned as floor(delay / bin) over [0, window).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <string>
#include <vector>

#include "triphoton/correlation.hpp"
#include "triphoton/error.hpp"
#include "triphoton/eventsim.hpp"
#include "triphoton/stats.hpp"

namespace triphoton {

enum class StopPolicy { all_stops, first_stop };
enum class MatchMethod { direct, delayed };

inline const char* to_string(MatchMethod m) { return m == MatchMethod::direct ? "direct-3fold" : "delayed-pairwise"; }
inline const char* to_string(StopPolicy p) { return p == StopPolicy::all_stops ? "all-stops" : "first-stop"; }

struct BinSpec {
  std::int64_t window_ps;
  std::int64_t bin_ps;
  std::size_t bins;

  BinSpec(double window, double bin) {
    if (!(bin > 0) || !(window > 0)) throw InvalidParameter("window and bin must be > 0");
    if (bin > window) throw InvalidParameter("bin wider than the coincidence window");
    bin_ps = std::llround(bin * 1e12);
    if (bin_ps < 1) throw InvalidParameter("bin below 1 ps");
    bins = std::size_t(std::llround(window * 1e12) / bin_ps);
    window_ps = std::int64_t(bins) * bin_ps;
  }
  Axis axis(std::string name) const {
    return Axis{std::move(name), "s", 0.5 * double(bin_ps) * 1e-12, double(bin_ps) * 1e-12, bins};
  }
};

struct PairwiseHistogram {
  Axis delay;
  std::vector<std::uint64_t> counts;
  int start_channel = 1, stop_channel = 2;
  double duration = 0;
};

struct CoincidenceHistogram2D {
  Axis tau21, tau31;                       // bin centers
  std::vector<std::uint64_t> counts;       // row = tau21 bin
  std::vector<std::uint64_t> counts_odd;   // subset from odd-numbered starts
  double window = 0, bin_width = 0, duration = 0;
  double floor_estimate = std::numeric_limits<double>::quiet_NaN();  // counts per bin
  MatchMethod method = MatchMethod::direct;
  StopPolicy policy = StopPolicy::all_stops;
  std::uint64_t tagged_true = 0;  // start and both stops carry the triplet tag

  std::size_t rows() const { return tau21.size; }
  std::size_t cols() const { return tau31.size; }
  std::uint64_t operator()(std::size_t i, std::size_t j) const { return counts[i * tau31.size + j]; }
  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
};

namespace detail {

struct Stop {
  std::int64_t t;
  Origin origin;
};

/// Holds starts until every stop that could fall in their window has been
/// seen, then hands (start, stops-in-window per stop channel) to a callback.
template <std::size_t NStop>
class StartStopCore {
 public:
  StartStopCore(int start, std::array<int, NStop> stops, std::int64_t window_ps, StopPolicy policy,
                std::int64_t shift_ps = 0)
      : start_(start), stop_ch_(stops), window_(window_ps), policy_(policy), shift_(shift_ps) {}

  template <class F>
  void push(const EventRecord& e, F&& on_start) {
    const std::int64_t t = std::int64_t(e.timestamp_ps) + shift_;
    if (t < last_) throw InvalidParameter("event stream is not time-sorted");
    last_ = t;
    flush(t, on_start);
    if (e.channel == start_) starts_.push_back({t, e.origin});
    for (std::size_t k = 0; k < NStop; ++k)
      if (e.channel == stop_ch_[k]) buf_[k].push_back({t, e.origin});
    prune(t);
  }

  template <class F>
  void finish(F&& on_start) {
    flush(std::numeric_limits<std::int64_t>::max(), on_start);
  }

 private:
  template <class F>
  void flush(std::int64_t now, F& on_start) {
    while (!starts_.empty() && (now == std::numeric_limits<std::int64_t>::max() || starts_.front().t + window_ <= now)) {
      const Stop s = starts_.front();
      starts_.pop_front();
      std::array<std::vector<Stop>, NStop> hits;
      for (std::size_t k = 0; k < NStop; ++k) {
        for (const auto& x : buf_[k]) {
          if (x.t < s.t) continue;
          if (x.t >= s.t + window_) break;
          hits[k].push_back({x.t - s.t, x.origin});
          if (policy_ == StopPolicy::first_stop) break;
        }
      }
      on_start(ordinal_++, s, hits);
    }
  }

  void prune(std::int64_t now) {
    const std::int64_t keep = starts_.empty() ? now : std::min(now, starts_.front().t);
    for (auto& b : buf_)
      while (!b.empty() && b.front().t < keep) b.pop_front();
  }

  int start_;
  std::array<int, NStop> stop_ch_;
  std::int64_t window_;
  StopPolicy policy_;
  std::int64_t shift_;
  std::int64_t last_ = std::numeric_limits<std::int64_t>::min();
  std::uint64_t ordinal_ = 0;
  std::deque<Stop> starts_;
  std::array<std::deque<Stop>, NStop> buf_;
};

inline CoincidenceHistogram2D empty_histogram(const BinSpec& b, MatchMethod m, StopPolicy p) {
  CoincidenceHistogram2D h;
  h.tau21 = b.axis("tau21");
  h.tau31 = b.axis("tau31");
  h.counts.assign(b.bins * b.bins, 0);
  h.counts_odd.assign(b.bins * b.bins, 0);
  h.window = double(b.window_ps) * 1e-12;
  h.bin_width = double(b.bin_ps) * 1e-12;
  h.method = m;
  h.policy = p;
  return h;
}

inline void add_pairs(CoincidenceHistogram2D& h, const BinSpec& b, std::uint64_t ordinal, Origin start,
                      const std::vector<Stop>& s2, const std::vector<Stop>& s3) {
  for (const auto& a : s2)
    for (const auto& c : s3) {
      const std::size_t k = std::size_t(a.t / b.bin_ps) * b.bins + std::size_t(c.t / b.bin_ps);
      ++h.counts[k];
      if (ordinal % 2) ++h.counts_odd[k];
      if (start == Origin::triplet && a.origin == Origin::triplet && c.origin == Origin::triplet) ++h.tagged_true;
    }
}

}  // namespace detail

/// One-sided start-stop histogram of stop - start delays in [0, window).
class PairwiseMatcher {
 public:
  PairwiseMatcher(int start, int stop, double window, double bin, StopPolicy policy = StopPolicy::all_stops)
      : bins_(window, bin), core_(start, {stop}, bins_.window_ps, policy) {
    hist_.delay = bins_.axis("delay");
    hist_.counts.assign(bins_.bins, 0);
    hist_.start_channel = start;
    hist_.stop_channel = stop;
  }
  void push(const EventRecord& e) { core_.push(e, [this](auto k, const auto& s, const auto& h) { take(k, s, h); }); }
  void push(const EventStream& s) {
    for (const auto& e : s) push(e);
  }
  PairwiseHistogram finish(double duration) {
    core_.finish([this](auto k, const auto& s, const auto& h) { take(k, s, h); });
    hist_.duration = duration;
    return hist_;
  }

 private:
  void take(std::uint64_t, const detail::Stop&, const std::array<std::vector<detail::Stop>, 1>& hits) {
    for (const auto& x : hits[0]) ++hist_.counts[std::size_t(x.t / bins_.bin_ps)];
  }
  BinSpec bins_;
  detail::StartStopCore<1> core_;
  PairwiseHistogram hist_;
};

inline PairwiseHistogram pairwise_histogram(const EventStream& s, int start, int stop, double window, double bin,
                                            double duration, StopPolicy policy = StopPolicy::all_stops) {
  PairwiseMatcher m(start, stop, window, bin, policy);
  m.push(s);
  return m.finish(duration);
}

/// Every (ch2, ch3) stop pair inside the window of a ch1 start counts once.
class DirectTripleMatcher {
 public:
  DirectTripleMatcher(double window, double bin, StopPolicy policy = StopPolicy::all_stops)
      : bins_(window, bin), core_(1, {2, 3}, bins_.window_ps, policy),
        hist_(detail::empty_histogram(bins_, MatchMethod::direct, policy)) {}
  void push(const EventRecord& e) { core_.push(e, [this](auto k, const auto& s, const auto& h) { take(k, s, h); }); }
  void push(const EventStream& s) {
    for (const auto& e : s) push(e);
  }
  CoincidenceHistogram2D finish(double duration) {
    core_.finish([this](auto k, const auto& s, const auto& h) { take(k, s, h); });
    hist_.duration = duration;
    return hist_;
  }

 private:
  void take(std::uint64_t k, const detail::Stop& s, const std::array<std::vector<detail::Stop>, 2>& hits) {
    detail::add_pairs(hist_, bins_, k, s.origin, hits[0], hits[1]);
  }
  BinSpec bins_;
  detail::StartStopCore<2> core_;
  CoincidenceHistogram2D hist_;
};

/// The two-TDC circuit: the ch1 pulse starts TDC A directly and TDC B after
/// `delay_offset`; ch2 stops TDC A and ch3, delayed by the same offset, stops
/// TDC B. Records from both TDCs that share a start are combined.
class DelayedTripleMatcher {
 public:
  DelayedTripleMatcher(double window, double bin, double delay_offset = 150e-9,
                       StopPolicy policy = StopPolicy::all_stops)
      : bins_(window, bin),
        offset_ps_(checked_offset(delay_offset, bins_)),
        tdc_a_(1, {2}, bins_.window_ps, policy),
        tdc_b_(1, {3}, bins_.window_ps, policy, offset_ps_),
        hist_(detail::empty_histogram(bins_, MatchMethod::delayed, policy)) {}

  void push(const EventRecord& e) {
    tdc_a_.push(e, [this](auto k, const auto& s, const auto& h) { take_a(k, s, h); });
    tdc_b_.push(e, [this](auto k, const auto& s, const auto& h) { take_b(k, s, h); });
  }
  void push(const EventStream& s) {
    for (const auto& e : s) push(e);
  }
  CoincidenceHistogram2D finish(double duration) {
    tdc_a_.finish([this](auto k, const auto& s, const auto& h) { take_a(k, s, h); });
    tdc_b_.finish([this](auto k, const auto& s, const auto& h) { take_b(k, s, h); });
    hist_.duration = duration;
    return hist_;
  }

 private:
  struct Record {
    std::uint64_t ordinal;
    Origin origin;
    std::vector<detail::Stop> stops;
  };

  static std::int64_t checked_offset(double d, const BinSpec& b) {
    if (!(d >= 0) || d * 1e12 + double(b.window_ps) > 9e18) throw InvalidParameter("delay offset not representable");
    return std::llround(d * 1e12);
  }

  void take_a(std::uint64_t k, const detail::Stop& s, const std::array<std::vector<detail::Stop>, 1>& hits) {
    pending_.push_back({k, s.origin, hits[0]});
  }
  void take_b(std::uint64_t k, const detail::Stop&, const std::array<std::vector<detail::Stop>, 1>& hits) {
    while (!pending_.empty() && pending_.front().ordinal < k) pending_.pop_front();
    if (pending_.empty() || pending_.front().ordinal != k) return;
    const Record r = std::move(pending_.front());
    pending_.pop_front();
    detail::add_pairs(hist_, bins_, k, r.origin, r.stops, hits[0]);
  }

  BinSpec bins_;
  std::int64_t offset_ps_;
  detail::StartStopCore<1> tdc_a_, tdc_b_;
  std::deque<Record> pending_;
  CoincidenceHistogram2D hist_;
};

inline CoincidenceHistogram2D reconstruct_triple_direct(const EventStream& s, double window, double bin,
                                                        double duration, StopPolicy policy = StopPolicy::all_stops) {
  DirectTripleMatcher m(window, bin, policy);
  m.push(s);
  return m.finish(duration);
}

inline CoincidenceHistogram2D reconstruct_triple_delayed(const EventStream& s, double window, double bin,
                                                         double duration, double delay_offset = 150e-9,
                                                         StopPolicy policy = StopPolicy::all_stops) {
  DelayedTripleMatcher m(window, bin, delay_offset, policy);
  m.push(s);
  return m.finish(duration);
}

// ---------------------------------------------------------------------------
// Accidental floor

struct FloorOptions {
  double border_fraction = 0.2;  // depth of the far-delay strips
  double ridge_margin = 0.2;     // excluded band around tau21 = 0, tau31 = 0 and tau21 = tau31
  int blocks_per_strip = 8;
  double outlier_sigma = 5.0;
};

struct FloorEstimate {
  double per_bin = 0;
  double error = 0;            // Poisson error of per_bin
  std::uint64_t counts = 0;    // counts in the accepted blocks
  std::size_t cells = 0;       // bins in the accepted blocks
  std::size_t blocks = 0, rejected = 0;
};

/// Accidental level from the strips at the largest tau21 and tau31. Cells near
/// tau21 = 0, tau31 = 0 or tau21 = tau31 are left out: a correlated pair plus
/// one uncorrelated click piles up there. The strips are cut into blocks;
/// blocks deviating from the median block mean by more than outlier_sigma are
/// dropped and the rest are pooled.
inline FloorEstimate estimate_floor_detail(const CoincidenceHistogram2D& h, const FloorOptions& o = {}) {
  const std::size_t n1 = h.rows(), n2 = h.cols();
  if (n1 < 10 || n2 < 10) throw EstimationError("histogram too small for a border estimate");
  const auto depth = [&](double f, std::size_t n) {
    return std::clamp<std::size_t>(std::size_t(std::lround(f * double(n))), 1, n - 1);
  };
  const std::size_t d1 = depth(o.border_fraction, n1), d2 = depth(o.border_fraction, n2);
  const double m1 = o.ridge_margin * double(n1), m2 = o.ridge_margin * double(n2);
  const double mdiag = o.ridge_margin * h.window;
  auto usable = [&](std::size_t i, std::size_t j) {
    return double(i) >= m1 && double(j) >= m2 && std::abs(h.tau21[i] - h.tau31[j]) >= mdiag;
  };
  struct Block {
    std::uint64_t sum = 0;
    std::size_t cells = 0;
  };
  std::vector<Block> blocks;
  const std::size_t nb = std::size_t(std::max(1, o.blocks_per_strip));
  // strip at large tau21, split along tau31
  for (std::size_t b = 0; b < nb; ++b) {
    Block blk;
    for (std::size_t i = n1 - d1; i < n1; ++i)
      for (std::size_t j = b * n2 / nb; j < (b + 1) * n2 / nb; ++j)
        if (usable(i, j)) {
          blk.sum += h(i, j);
          ++blk.cells;
        }
    if (blk.cells) blocks.push_back(blk);
  }
  // strip at large tau31 above the first one, split along tau21
  const std::size_t rows = n1 - d1;
  for (std::size_t b = 0; b < nb; ++b) {
    Block blk;
    for (std::size_t i = b * rows / nb; i < (b + 1) * rows / nb; ++i)
      for (std::size_t j = n2 - d2; j < n2; ++j)
        if (usable(i, j)) {
          blk.sum += h(i, j);
          ++blk.cells;
        }
    if (blk.cells) blocks.push_back(blk);
  }
  if (blocks.empty()) throw EstimationError("no usable border cells");
  std::vector<double> means;
  for (const auto& b : blocks) means.push_back(double(b.sum) / double(b.cells));
  const double med = median(means);
  FloorEstimate f;
  f.blocks = blocks.size();
  for (const auto& b : blocks) {
    const double c = double(b.cells);
    const double sigma = std::sqrt(std::max(med * c, 1.0)) / c;
    if (std::abs(double(b.sum) / c - med) > o.outlier_sigma * sigma) {
      ++f.rejected;
      continue;
    }
    f.counts += b.sum;
    f.cells += b.cells;
  }
  if (2 * f.rejected > f.blocks || f.cells == 0)
    throw EstimationError("correlation feature reaches the border strips; no flat region to estimate the floor");
  f.per_bin = double(f.counts) / double(f.cells);
  f.error = std::sqrt(double(f.counts)) / double(f.cells);
  return f;
}

inline double estimate_floor(CoincidenceHistogram2D& h, const FloorOptions& o = {}) {
  h.floor_estimate = estimate_floor_detail(h, o).per_bin;
  return h.floor_estimate;
}

/// counts - floor, clamped at zero unless `signed_map`.
inline RealGrid2D subtract_accidentals(const CoincidenceHistogram2D& h, bool signed_map = false) {
  if (!std::isfinite(h.floor_estimate)) throw EstimationError("floor not estimated");
  RealGrid2D g(h.tau21, h.tau31);
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    const double v = double(h.counts[k]) - h.floor_estimate;
    g.values[k] = signed_map ? v : std::max(0.0, v);
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s minus floor %.9g per bin%s", to_string(h.method), h.floor_estimate,
                signed_map ? " (signed)" : "");
  g.provenance = buf;
  return g;
}

/// Sums q x q blocks; trailing partial blocks are dropped.
inline RealGrid2D rebin(const RealGrid2D& g, std::size_t q1, std::size_t q2) {
  if (q1 == 0 || q2 == 0) throw InvalidParameter("rebin factor must be >= 1");
  const std::size_t m1 = g.rows() / q1, m2 = g.cols() / q2;
  if (m1 == 0 || m2 == 0) throw InvalidParameter("rebin factor larger than the grid");
  Axis a1{g.axis1.name, g.axis1.unit, g.axis1.start + 0.5 * double(q1 - 1) * g.axis1.step, g.axis1.step * double(q1), m1};
  Axis a2{g.axis2.name, g.axis2.unit, g.axis2.start + 0.5 * double(q2 - 1) * g.axis2.step, g.axis2.step * double(q2), m2};
  RealGrid2D out(a1, a2);
  for (std::size_t i = 0; i < m1 * q1; ++i)
    for (std::size_t j = 0; j < m2 * q2; ++j) out(i / q1, j / q2) += g(i, j);
  out.provenance = g.provenance;
  return out;
}

inline RealGrid2D to_real(const CoincidenceHistogram2D& h, bool odd_only = false) {
  RealGrid2D g(h.tau21, h.tau31);
  const auto& c = odd_only ? h.counts_odd : h.counts;
  for (std::size_t k = 0; k < c.size(); ++k) g.values[k] = double(c[k]);
  return g;
}

/// r3 integrated over the histogram bins (midpoint sampling of the map at
/// sub-bin resolution), normalized to unit sum.
inline RealGrid2D expected_histogram(const CorrelationMap& map, const Axis& tau21, const Axis& tau31) {
  const auto& r = map.r3;
  RealGrid2D out(tau21, tau31);
  auto lookup = [&](double t21, double t31) {
    const double x = (t21 - r.axis1.start) / r.axis1.step, y = (t31 - r.axis2.start) / r.axis2.step;
    const long i = std::lround(x), j = std::lround(y);
    if (i < 0 || j < 0 || i >= long(r.rows()) || j >= long(r.cols())) return 0.0;
    return r(std::size_t(i), std::size_t(j));
  };
  const int sub = std::max(1, int(std::ceil(tau21.step / r.axis1.step)));
  const int sub3 = std::max(1, int(std::ceil(tau31.step / r.axis2.step)));
  double total = 0;
  for (std::size_t i = 0; i < tau21.size; ++i)
    for (std::size_t j = 0; j < tau31.size; ++j) {
      double s = 0;
      for (int a = 0; a < sub; ++a)
        for (int b = 0; b < sub3; ++b)
          s += lookup(tau21[i] + ((a + 0.5) / sub - 0.5) * tau21.step, tau31[j] + ((b + 0.5) / sub3 - 0.5) * tau31.step);
      out(i, j) = s;
      total += s;
    }
  if (total > 0)
    for (double& v : out.values) v /= total;
  return out;
}

// ---------------------------------------------------------------------------
// Rates and nonclassicality

struct RatesOptions {
  std::array<double, 3> g1{1.6, 2.0, 2.0};
  double peak_cell = 2e-9;  // g3 is read on cells of about this width
  FloorOptions floor;
};

struct RatesReport {
  double triplet_rate_per_min = 0, triplet_rate_error = 0;
  double accidental_rate_per_min = 0, accidental_rate_error = 0;
  double floor_per_bin = 0;
  double g3_peak = 0, g3_error = 0;
  double cauchy_schwarz_factor = 0, cauchy_schwarz_error = 0;
  bool cauchy_schwarz_infinite = false;
  double visibility = 0;
  std::vector<std::array<double, 2>> dominant_periods;  // (seconds, confidence) for tau21 then tau31 traces
  std::uint64_t total_counts = 0;
};

inline ConditionalTrace histogram_trace(const RealGrid2D& g, TraceKind kind) {
  CorrelationMap m;
  m.r3 = g;
  return trace_map(m, kind);
}

inline RatesReport rates_report(CoincidenceHistogram2D& h, const RatesOptions& o = {}) {
  if (!(h.duration > 0)) throw InvalidParameter("histogram duration must be > 0");
  const FloorEstimate f = estimate_floor_detail(h, o.floor);
  h.floor_estimate = f.per_bin;
  const double bins = double(h.counts.size());
  const double minutes = h.duration / 60.0;
  RatesReport r;
  r.total_counts = h.total();
  r.floor_per_bin = f.per_bin;
  const double acc = f.per_bin * bins;
  const double acc_err = f.error * bins;
  r.accidental_rate_per_min = acc / minutes;
  r.accidental_rate_error = acc_err / minutes;
  r.triplet_rate_per_min = std::max(0.0, double(r.total_counts) - acc) / minutes;
  r.triplet_rate_error = std::sqrt(double(r.total_counts) + acc_err * acc_err) / minutes;

  // g3 at the peak cell: located on the odd-start subset, read on the even one
  const std::size_t q = std::max<std::size_t>(1, std::size_t(std::lround(o.peak_cell / h.bin_width)));
  const RealGrid2D all = rebin(to_real(h), q, q);
  const RealGrid2D odd = rebin(to_real(h, true), q, q);
  const std::size_t kpk = std::size_t(std::max_element(odd.values.begin(), odd.values.end()) - odd.values.begin());
  const double even_counts = all.values[kpk] - odd.values[kpk];
  const double even_floor = 0.5 * f.per_bin * double(q * q);
  if (even_floor <= 0) {
    r.cauchy_schwarz_infinite = true;
    r.g3_peak = r.cauchy_schwarz_factor = std::numeric_limits<double>::infinity();
  } else {
    r.g3_peak = even_counts / even_floor;
    const double rel_floor = f.counts ? 1.0 / std::sqrt(double(f.counts)) : 1.0;
    r.g3_error = std::sqrt(std::max(even_counts, 1.0)) / even_floor + r.g3_peak * rel_floor;
    if (r.g3_peak > 0) {
      r.cauchy_schwarz_factor = cauchy_schwarz_factor(r.g3_peak, o.g1);
      r.cauchy_schwarz_error = 2.0 * r.cauchy_schwarz_factor * r.g3_error / r.g3_peak;
    } else {
      const double d = o.g1[0] * o.g1[1] * o.g1[2];
      r.cauchy_schwarz_error = 2.0 * r.g3_error / (d * d);
    }
  }

  const RealGrid2D sub = subtract_accidentals(h);
  const auto t21 = histogram_trace(sub, TraceKind::trace_out_s3);
  const auto t31 = histogram_trace(sub, TraceKind::trace_out_s2);
  r.visibility = visibility(t21);
  for (const auto* t : {&t21, &t31}) {
    const auto p = oscillation_period(*t);
    r.dominant_periods.push_back({p.period, p.confidence});
  }
  return r;
}

struct DiagnoseResult {
  bool flat = true;
  double max_deviation_sigma = 0;
  double floor_per_bin = 0;
  std::size_t worst_bin = 0;
};

/// A start-stop histogram tested for flatness: no bin beyond `threshold`
/// Gaussian-equivalent sigma of the Poisson floor. The floor is the mean of
/// the bins that agree with the median bin.
inline DiagnoseResult flatness(const PairwiseHistogram& h, double threshold = 4.0) {
  DiagnoseResult d;
  double total = 0;
  for (auto c : h.counts) total += double(c);
  if (total == 0) return d;
  std::vector<double> c(h.counts.begin(), h.counts.end());
  const double med = std::max(median(c), 0.5);
  double sum = 0;
  std::size_t n = 0;
  for (double x : c)
    if (std::abs(poisson_deviation_sigma(x, med)) <= threshold) sum += x, ++n;
  d.floor_per_bin = n ? sum / double(n) : total / double(c.size());
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    const double z = poisson_deviation_sigma(double(h.counts[k]), d.floor_per_bin);
    if (std::abs(z) > std::abs(d.max_deviation_sigma)) {
      d.max_deviation_sigma = z;
      d.worst_bin = k;
    }
  }
  d.max_deviation_sigma = std::abs(d.max_deviation_sigma);
  d.flat = d.max_deviation_sigma <= threshold;
  return d;
}

/// ch3 start / ch4 stop cross-check.
inline DiagnoseResult diagnose_crosscheck(const EventStream& s, double window, double bin, double threshold = 4.0) {
  return flatness(pairwise_histogram(s, 3, 4, window, bin, 0.0), threshold);
}

}  // namespace triphoton
