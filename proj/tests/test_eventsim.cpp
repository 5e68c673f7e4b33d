#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "triphoton/eventsim.hpp"

using namespace triphoton;

namespace {

SourceConfig quiet(double duration = 2.0) {
  SourceConfig c;
  c.triplet_rate = 0;
  c.singles_rate = {0, 0, 0};
  c.dark_rate = {0, 0, 0};
  c.dual_pairs.clear();
  c.duration = duration;
  return c;
}

// Two occupied cells: (2 ns, 5 ns) with weight 3 and (6 ns, 1 ns) with weight 1.
CorrelationMap two_cell_map() {
  CorrelationMap m;
  m.r3 = RealGrid2D(Axis::linspace("tau21", "s", 0, 8e-9, 5), Axis::linspace("tau31", "s", 0, 8e-9, 9));
  m.r3(1, 5) = 3.0;
  m.r3(3, 1) = 1.0;
  return m;
}

std::size_t count_channel(const EventStream& s, int ch) {
  return std::size_t(std::count_if(s.begin(), s.end(), [&](const EventRecord& e) { return e.channel == ch; }));
}

}  // namespace

TEST(Generator, SameSeedSameStream) {
  SourceConfig c;
  c.duration = 0.5;
  c.diagnose_rate = 2000;
  const auto map = two_cell_map();
  const auto a = generate_stream(map, c), b = generate_stream(map, c);
  EXPECT_EQ(a, b);
  c.seed = 2;
  EXPECT_NE(a, generate_stream(map, c));
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
}

TEST(Generator, ChunkLengthDoesNotChangeOutput) {
  SourceConfig c;
  c.duration = 0.3;
  c.triplet_rate = 5000;
  c.diagnose_rate = 1000;
  c.dead_time = {50e-9, 50e-9, 50e-9, 20e-9};
  const auto map = two_cell_map();
  const auto ref = generate_stream(map, c);
  for (double chunk : {1e-4, 3.3e-3, 0.1, 10.0}) {
    StreamGenerator g(&map, c);
    EventStream out;
    while (g.next_chunk(out, chunk)) {
    }
    EXPECT_EQ(out, ref) << chunk;
  }
}

TEST(Generator, PoissonSinglesRates) {
  auto c = quiet(20.0);
  c.singles_rate = {5000, 10000, 0};
  c.dark_rate = {100, 0, 300};
  GeneratorStats st;
  const auto s = generate_stream(c, &st);
  for (int ch = 1; ch <= 3; ++ch) {
    const double expect = c.detected_singles(ch) * c.duration;
    EXPECT_NEAR(double(count_channel(s, ch)), expect, 5 * std::sqrt(expect)) << ch;
    EXPECT_EQ(st.channel_counts[ch], count_channel(s, ch));
  }
  // counts in 10 ms bins have Fano factor 1
  std::vector<double> bins(2000, 0.0);
  for (const auto& e : s)
    if (e.channel == 2) bins[e.timestamp_ps / 10000000000ull] += 1;
  double m = 0, v = 0;
  for (double b : bins) m += b;
  m /= double(bins.size());
  for (double b : bins) v += (b - m) * (b - m);
  v /= double(bins.size() - 1);
  EXPECT_NEAR(v / m, 1.0, 0.15);
  EXPECT_EQ(st.origin_counts[std::size_t(Origin::triplet)], 0u);
}

TEST(Generator, TripletsThinnedByDetectionEfficiency) {
  auto c = quiet(10.0);
  c.triplet_rate = 2000;
  c.jitter_sigma = 0;
  GeneratorStats st;
  const auto s = generate_stream(two_cell_map(), c, &st);
  const double p = c.survival(1);
  EXPECT_NEAR(double(st.triplets_emitted), c.triplet_rate * c.duration, 5 * std::sqrt(c.triplet_rate * c.duration));
  const double e3 = double(st.triplets_emitted) * p * p * p;
  EXPECT_NEAR(double(st.triplets_detected), e3, 5 * std::sqrt(e3));
  const double e1 = double(st.triplets_emitted) * p;
  EXPECT_NEAR(double(count_channel(s, 1)), e1, 5 * std::sqrt(e1));
  EXPECT_EQ(st.triplet_delays_ps.size(), st.triplets_detected);
}

TEST(Generator, TripletDelaysFollowTheMap) {
  auto c = quiet(10.0);
  c.triplet_rate = 5000;
  c.jitter_sigma = 0;
  c.detector_efficiency = {1, 1, 1};
  c.fiber_coupling = 1;
  GeneratorStats st;
  generate_stream(two_cell_map(), c, &st);
  std::size_t heavy = 0;
  for (const auto& d : st.triplet_delays_ps) {
    const bool a = std::abs(d[0] - 2000) <= 1001 && std::abs(d[1] - 5000) <= 501;
    const bool b = std::abs(d[0] - 6000) <= 1001 && std::abs(d[1] - 1000) <= 501;
    ASSERT_TRUE(a || b) << d[0] << " " << d[1];
    heavy += a;
  }
  const double n = double(st.triplet_delays_ps.size());
  EXPECT_NEAR(double(heavy) / n, 0.75, 5 * std::sqrt(0.75 * 0.25 / n));
}

TEST(Generator, JitterWidensDelays) {
  auto c = quiet(5.0);
  c.triplet_rate = 5000;
  c.jitter_sigma = 1e-9;
  c.detector_efficiency = {1, 1, 1};
  c.fiber_coupling = 1;
  auto map = two_cell_map();
  map.r3(3, 1) = 0;
  GeneratorStats st;
  generate_stream(map, c, &st);
  double m = 0, v = 0;
  for (const auto& d : st.triplet_delays_ps) m += double(d[1]);
  m /= double(st.triplet_delays_ps.size());
  for (const auto& d : st.triplet_delays_ps) v += std::pow(double(d[1]) - m, 2);
  v /= double(st.triplet_delays_ps.size() - 1);
  EXPECT_NEAR(m, 5000, 50);
  // 1 ns uniform cell plus two independent 1 ns jitters
  EXPECT_NEAR(std::sqrt(v), std::sqrt(1e6 / 12 + 2e6), 50);
}

TEST(Generator, DualPairsOnly) {
  const auto d = sfwm_dual_pairs(50.0);
  ASSERT_EQ(d.size(), 15u);
  std::set<std::string> labels;
  for (const auto& x : d) labels.insert(x.label);
  EXPECT_EQ(labels.size(), 15u);
  auto c = quiet(5.0);
  c.dual_pairs = d;
  GeneratorStats st;
  const auto s = generate_stream(c, &st);
  EXPECT_FALSE(s.empty());
  for (const auto& e : s) {
    EXPECT_EQ(e.origin, Origin::dual_pair);
    EXPECT_LE(e.channel, 3);
  }
}

TEST(Generator, DiagnoseChannelIsIndependent) {
  SourceConfig c;
  c.duration = 1.0;
  c.diagnose_rate = 3000;
  const auto map = two_cell_map();
  const auto full = generate_stream(map, c);
  EventStream ch4, rest;
  for (const auto& e : full) (e.channel == 4 ? ch4 : rest).push_back(e);
  EXPECT_EQ(ch4, diagnose_stream(c));
  c.diagnose_rate = 0;
  EXPECT_EQ(rest, generate_stream(map, c));
}

TEST(Generator, DeadTimeEnforcesMinimumSpacing) {
  auto c = quiet(2.0);
  c.singles_rate = {2e6, 0, 0};
  c.dead_time = {1e-6, 0, 0, 0};
  const auto s = generate_stream(c);
  std::int64_t last = -1, min_gap = INT64_MAX;
  for (const auto& e : s)
    if (e.channel == 1) {
      if (last >= 0) min_gap = std::min<std::int64_t>(min_gap, std::int64_t(e.timestamp_ps) - last);
      last = std::int64_t(e.timestamp_ps);
    }
  EXPECT_GE(min_gap, 1000000);
  // non-paralyzable: r / (1 + r tau)
  const double r = c.detected_singles(1), expect = r / (1 + r * 1e-6) * c.duration;
  EXPECT_NEAR(double(count_channel(s, 1)), expect, 5 * std::sqrt(expect));
}

TEST(Calibration, HitsTripletAndAccidentalTargets) {
  SourceConfig c;
  const double W = 195e-9;
  calibrate_rates(c, 102, 6, W);
  EXPECT_NEAR(c.detected_triplet_rate() * 60, 102, 1e-9);
  const double r = c.detected_singles(1) * c.detected_singles(2) * c.detected_singles(3);
  EXPECT_NEAR(r * W * W * 60, 6, 1e-9);
  EXPECT_NEAR(c.detected_singles(1), 13797.0, 50.0);
  c.dark_rate = {1e6, 1e6, 1e6};
  EXPECT_THROW(calibrate_rates(c, 102, 6, W), InvalidParameter);
}

TEST(Config, Validation) {
  const auto map = two_cell_map();
  SourceConfig c;
  EXPECT_THROW(generate_stream(c), InvalidParameter);
  c.detector_efficiency[1] = 1.5;
  EXPECT_THROW(generate_stream(map, c), InvalidParameter);
  c = SourceConfig{};
  c.duration = 0;
  EXPECT_THROW(generate_stream(map, c), InvalidParameter);
  c = SourceConfig{};
  c.dual_pairs[0].pair_b = {4, 0};
  EXPECT_THROW(generate_stream(map, c), InvalidParameter);
  CorrelationMap empty;
  empty.r3 = RealGrid2D(Axis::linspace("a", "s", 0, 1e-9, 2), Axis::linspace("b", "s", 0, 1e-9, 2));
  EXPECT_THROW(generate_stream(empty, SourceConfig{}), InvalidParameter);
}
