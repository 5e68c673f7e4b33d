#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "triphoton/coincidence.hpp"

using namespace triphoton;

namespace {

EventRecord ev(std::uint64_t t, int ch, Origin o = Origin::none) { return {t, std::uint8_t(ch), o}; }

EventStream sorted(EventStream s) {
  std::sort(s.begin(), s.end());
  return s;
}

EventStream random_stream(std::uint64_t seed, std::size_t n, std::uint64_t span_ps) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> t(0, span_ps);
  std::uniform_int_distribution<int> ch(1, 3);
  EventStream s;
  for (std::size_t k = 0; k < n; ++k) s.push_back(ev(t(rng), ch(rng)));
  return sorted(s);
}

// Quadratic-time reference for the all-stops three-fold histogram.
std::vector<std::uint64_t> brute_triple(const EventStream& s, std::int64_t window, std::int64_t bin) {
  const std::size_t n = std::size_t(window / bin);
  std::vector<std::uint64_t> h(n * n, 0);
  for (const auto& a : s) {
    if (a.channel != 1) continue;
    for (const auto& b : s) {
      if (b.channel != 2) continue;
      const std::int64_t d2 = std::int64_t(b.timestamp_ps) - std::int64_t(a.timestamp_ps);
      if (d2 < 0 || d2 >= window) continue;
      for (const auto& c : s) {
        if (c.channel != 3) continue;
        const std::int64_t d3 = std::int64_t(c.timestamp_ps) - std::int64_t(a.timestamp_ps);
        if (d3 < 0 || d3 >= window) continue;
        ++h[std::size_t(d2 / bin) * n + std::size_t(d3 / bin)];
      }
    }
  }
  return h;
}

SourceConfig noise(double rate, double duration, std::uint64_t seed = 1) {
  SourceConfig c;
  c.triplet_rate = 0;
  c.singles_rate = {rate, rate, rate};
  c.dark_rate = {0, 0, 0};
  c.dual_pairs.clear();
  c.detector_efficiency = {1, 1, 1};
  c.fiber_coupling = 1;
  c.duration = duration;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Binning, DelayLandsInFloorBin) {
  const EventStream s{ev(1000, 1), ev(4100, 2), ev(8900, 3)};
  const auto h = reconstruct_triple_direct(s, 195e-9, 0.25e-9, 1.0);
  EXPECT_EQ(h.rows(), 780u);
  EXPECT_EQ(h(12, 31), 1u);
  EXPECT_EQ(h.total(), 1u);
  EXPECT_NEAR(h.tau21[12], 3.125e-9, 1e-18);
  EXPECT_THROW(BinSpec(1e-9, 2e-9), InvalidParameter);
  EXPECT_THROW(BinSpec(1e-9, 0), InvalidParameter);
}

TEST(Binning, WindowEdges) {
  const std::int64_t W = 10000;
  const EventStream s{ev(5000, 2), ev(10000, 1), ev(10000, 2), ev(10000, 3), ev(19999, 3), ev(20000, 2)};
  const auto h = reconstruct_triple_direct(s, 10e-9, 1e-9, 1.0);
  // stop at delay 0 counts, delay == window does not, earlier stops do not
  EXPECT_EQ(h.total(), 2u);
  EXPECT_EQ(h(0, 0), 1u);
  EXPECT_EQ(h(0, std::size_t((W - 1) / 1000)), 1u);
}

TEST(Matching, AllStopsCountsEveryCombination) {
  const EventStream s{ev(0, 1), ev(1000, 2), ev(1500, 3), ev(2000, 2), ev(2500, 3), ev(3500, 3)};
  const auto all = reconstruct_triple_direct(s, 10e-9, 0.5e-9, 1.0);
  EXPECT_EQ(all.total(), 6u);
  const auto first = reconstruct_triple_direct(s, 10e-9, 0.5e-9, 1.0, StopPolicy::first_stop);
  EXPECT_EQ(first.total(), 1u);
  EXPECT_EQ(first(2, 3), 1u);
  const auto d = reconstruct_triple_delayed(s, 10e-9, 0.5e-9, 1.0, 150e-9, StopPolicy::first_stop);
  EXPECT_EQ(d.counts, first.counts);
}

TEST(Matching, DirectMatchesBruteForce) {
  const auto s = random_stream(3, 3000, 4000000);
  const auto h = reconstruct_triple_direct(s, 20e-9, 1e-9, 1.0);
  EXPECT_EQ(h.counts, brute_triple(s, 20000, 1000));
  EXPECT_GT(h.total(), 100u);
}

TEST(Matching, DelayedEqualsDirect) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto s = random_stream(seed, 20000, 20000000);
    const auto a = reconstruct_triple_direct(s, 30e-9, 0.5e-9, 1.0);
    for (double off : {0.0, 17e-9, 150e-9}) {
      const auto b = reconstruct_triple_delayed(s, 30e-9, 0.5e-9, 1.0, off);
      EXPECT_EQ(a.counts, b.counts) << off;
      EXPECT_EQ(a.counts_odd, b.counts_odd) << off;
    }
  }
}

TEST(Matching, StreamingPushEqualsBatch) {
  const auto s = random_stream(9, 5000, 5000000);
  DirectTripleMatcher m(20e-9, 1e-9);
  for (const auto& e : s) m.push(e);
  EXPECT_EQ(m.finish(1.0).counts, reconstruct_triple_direct(s, 20e-9, 1e-9, 1.0).counts);
  DelayedTripleMatcher d(20e-9, 1e-9);
  const std::size_t half = s.size() / 2;
  d.push(EventStream(s.begin(), s.begin() + std::ptrdiff_t(half)));
  d.push(EventStream(s.begin() + std::ptrdiff_t(half), s.end()));
  EXPECT_EQ(d.finish(1.0).counts, reconstruct_triple_direct(s, 20e-9, 1e-9, 1.0).counts);
}

TEST(Matching, UnsortedInputIsRejected) {
  const EventStream s{ev(100, 1), ev(50, 2)};
  EXPECT_THROW(reconstruct_triple_direct(s, 10e-9, 1e-9, 1.0), InvalidParameter);
  EXPECT_THROW(reconstruct_triple_delayed(s, 10e-9, 1e-9, 1.0), InvalidParameter);
}

TEST(Matching, TaggedTriplets) {
  const EventStream s{ev(0, 1, Origin::triplet), ev(1000, 2, Origin::triplet), ev(1200, 2, Origin::single),
                      ev(2000, 3, Origin::triplet)};
  const auto h = reconstruct_triple_direct(s, 10e-9, 1e-9, 1.0);
  EXPECT_EQ(h.total(), 2u);
  EXPECT_EQ(h.tagged_true, 1u);
}

TEST(Pairwise, MatchesBruteForce) {
  const auto s = random_stream(4, 4000, 4000000);
  const auto h = pairwise_histogram(s, 1, 3, 25e-9, 0.5e-9, 1.0);
  std::vector<std::uint64_t> ref(50, 0);
  for (const auto& a : s)
    if (a.channel == 1)
      for (const auto& b : s)
        if (b.channel == 3) {
          const std::int64_t d = std::int64_t(b.timestamp_ps) - std::int64_t(a.timestamp_ps);
          if (d >= 0 && d < 25000) ++ref[std::size_t(d / 500)];
        }
  EXPECT_EQ(h.counts, ref);
}

TEST(Floor, PureNoiseMatchesProductOfRates) {
  const double r = 1.5e5, bin = 2e-9, W = 100e-9, T = 20.0;
  const auto s = generate_stream(noise(r, T));
  auto h = reconstruct_triple_direct(s, W, bin, T);
  const auto f = estimate_floor_detail(h);
  const double expect = r * r * r * bin * bin * T;
  EXPECT_LT(f.error / expect, 0.1);
  EXPECT_NEAR(f.per_bin, expect, 3 * f.error);
  EXPECT_NEAR(f.per_bin, expect, 0.1 * expect);
  EXPECT_EQ(f.rejected, 0u);
  EXPECT_NEAR(f.per_bin, double(h.total()) / double(h.counts.size()), 3 * f.error);
}

TEST(Floor, RidgesAreExcluded) {
  // flat floor of 4 per bin plus pair ridges at tau21 = 0, tau31 = 0 and tau21 = tau31
  auto h = detail::empty_histogram(BinSpec(40e-9, 1e-9), MatchMethod::direct, StopPolicy::all_stops);
  h.duration = 60;
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 40; ++j) h.counts[i * 40 + j] = 4 + (i == 0 || j == 0 || i == j ? 100 : 0);
  const auto f = estimate_floor_detail(h);
  EXPECT_DOUBLE_EQ(f.per_bin, 4.0);
  estimate_floor(h);
  const auto sub = subtract_accidentals(h);
  EXPECT_DOUBLE_EQ(sub(5, 7), 0.0);
  EXPECT_DOUBLE_EQ(sub(5, 5), 100.0);
  auto small = detail::empty_histogram(BinSpec(5e-9, 1e-9), MatchMethod::direct, StopPolicy::all_stops);
  EXPECT_THROW(estimate_floor_detail(small), EstimationError);
  EXPECT_THROW(subtract_accidentals(small), EstimationError);
}

TEST(Floor, OutlierBlocksAreDropped) {
  auto h = detail::empty_histogram(BinSpec(40e-9, 1e-9), MatchMethod::direct, StopPolicy::all_stops);
  for (auto& c : h.counts) c = 9;
  h.counts[39 * 40 + 20] = 500;
  const auto f = estimate_floor_detail(h);
  EXPECT_DOUBLE_EQ(f.per_bin, 9.0);
  EXPECT_EQ(f.rejected, 1u);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 40; ++j) h.counts[i * 40 + j] = 10 * (i + j);
  EXPECT_THROW(estimate_floor_detail(h, {0.2, 0.2, 8, 5.0}), EstimationError);
}

TEST(Rates, SyntheticHistogram) {
  auto h = detail::empty_histogram(BinSpec(40e-9, 0.5e-9), MatchMethod::direct, StopPolicy::all_stops);
  h.duration = 120;
  for (auto& c : h.counts) c = 2;
  for (auto& c : h.counts_odd) c = 1;
  // 1000 correlated counts around (5 ns, 8 ns)
  for (std::size_t i = 8; i < 12; ++i)
    for (std::size_t j = 14; j < 18; ++j) {
      h.counts[i * 80 + j] += 62;
      h.counts_odd[i * 80 + j] += 31;
    }
  h.counts[10 * 80 + 16] += 8;
  const auto r = rates_report(h);
  EXPECT_DOUBLE_EQ(r.floor_per_bin, 2.0);
  EXPECT_NEAR(r.triplet_rate_per_min, 1000.0 / 2, 1e-9);
  EXPECT_NEAR(r.accidental_rate_per_min, 2.0 * 6400 / 2, 1e-9);
  EXPECT_GT(r.g3_peak, 1.0);
  EXPECT_GT(r.cauchy_schwarz_factor, 1.0);
  ASSERT_EQ(r.dominant_periods.size(), 2u);
  h.duration = 0;
  EXPECT_THROW(rates_report(h), InvalidParameter);
}

TEST(Rates, NoiseOnlyStreamIsClassical) {
  const double T = 20.0;
  const auto s = generate_stream(noise(1.5e5, T, 5));
  auto h = reconstruct_triple_direct(s, 100e-9, 2e-9, T);
  const auto r = rates_report(h);
  EXPECT_LE(r.cauchy_schwarz_factor, 1.0 + 3 * r.cauchy_schwarz_error);
  EXPECT_LE(r.triplet_rate_per_min, 3 * r.triplet_rate_error);
}

TEST(Rebin, SumsBlocks) {
  RealGrid2D g(Axis::linspace("a", "s", 0, 4, 5), Axis::linspace("b", "s", 0, 3, 4));
  for (std::size_t k = 0; k < g.values.size(); ++k) g.values[k] = double(k);
  const auto r = rebin(g, 2, 2);
  EXPECT_EQ(r.rows(), 2u);
  EXPECT_EQ(r.cols(), 2u);
  EXPECT_DOUBLE_EQ(r(0, 0), 0 + 1 + 4 + 5);
  EXPECT_DOUBLE_EQ(r(1, 1), 10 + 11 + 14 + 15);
  EXPECT_DOUBLE_EQ(r.axis1.start, 0.5);
  EXPECT_DOUBLE_EQ(r.axis1.step, 2.0);
  EXPECT_THROW(rebin(g, 0, 1), InvalidParameter);
  EXPECT_THROW(rebin(g, 6, 1), InvalidParameter);
}

TEST(Expected, HistogramOfMapIsNormalized) {
  CorrelationMap m;
  m.r3 = RealGrid2D(Axis::linspace("tau21", "s", 0, 10e-9, 41), Axis::linspace("tau31", "s", 0, 10e-9, 41));
  m.r3(10, 22) = 1.0;
  const auto e = expected_histogram(m, BinSpec(10e-9, 1e-9).axis("tau21"), BinSpec(10e-9, 1e-9).axis("tau31"));
  double s = 0;
  for (double v : e.values) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(e(2, 5), 1.0);
}

TEST(Diagnose, IndependentChannelIsFlat) {
  auto c = noise(2e4, 20.0);
  c.diagnose_rate = 2e4;
  const auto d = diagnose_crosscheck(generate_stream(c), 195e-9, 0.25e-9 * 8);
  EXPECT_TRUE(d.flat) << d.max_deviation_sigma;
  EXPECT_GT(d.floor_per_bin, 0.0);
}

TEST(Diagnose, ClonedChannelShowsSpike) {
  auto s = generate_stream(noise(2e4, 5.0));
  EventStream clone;
  for (const auto& e : s)
    if (e.channel == 3) clone.push_back(ev(e.timestamp_ps + 40000, 4));
  s.insert(s.end(), clone.begin(), clone.end());
  std::sort(s.begin(), s.end());
  const auto d = diagnose_crosscheck(s, 195e-9, 2e-9);
  EXPECT_FALSE(d.flat);
  EXPECT_EQ(d.worst_bin, 20u);
  EXPECT_GT(d.max_deviation_sigma, 10.0);
}

TEST(Diagnose, EmptyChannelIsFlat) {
  const auto d = diagnose_crosscheck(generate_stream(noise(1e4, 1.0)), 195e-9, 2e-9);
  EXPECT_TRUE(d.flat);
  EXPECT_EQ(d.max_deviation_sigma, 0.0);
}

TEST(Stats, ChiSquareAndPearson) {
  const std::vector<int> a{10, 20, 30, 40};
  const auto same = compare_poisson(a, a);
  EXPECT_EQ(same.chi2, 0.0);
  EXPECT_EQ(same.p_value, 1.0);
  const auto diff = compare_poisson(a, std::vector<int>{40, 30, 20, 10});
  EXPECT_NEAR(diff.chi2, 900.0 / 50 * 2 + 100.0 / 50 * 2, 1e-12);
  EXPECT_EQ(diff.dof, 4u);
  EXPECT_NEAR(chi2_survival(3.841458820694124, 1), 0.05, 1e-12);
  EXPECT_EQ(compare_poisson(std::vector<int>(300000, 3), std::vector<int>(300000, 3)).p_value, 1.0);
  EXPECT_NEAR(pearson(a, std::vector<double>{1, 2, 3, 4}), 1.0, 1e-15);
  EXPECT_NEAR(pearson(a, std::vector<double>{4, 3, 2, 1}), -1.0, 1e-15);
  EXPECT_THROW(compare_poisson(a, std::vector<int>{1}), InvalidParameter);
}

TEST(Stats, GoodnessOfFitOnPoissonSamples) {
  std::mt19937_64 rng(2);
  std::vector<double> expected(500);
  std::vector<int> observed(500);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    expected[i] = 0.2 + 30.0 * std::exp(-double(i) / 100.0);
    observed[i] = std::poisson_distribution<int>(expected[i])(rng);
  }
  const auto g = goodness_of_fit(observed, expected);
  EXPECT_GT(g.p_value, 0.001);
  for (auto& o : observed) o *= 2;
  EXPECT_LT(goodness_of_fit(observed, expected).p_value, 1e-6);
}

TEST(Stats, PoissonDeviation) {
  EXPECT_EQ(poisson_deviation_sigma(10, 10), 0.0);
  EXPECT_GT(poisson_deviation_sigma(30, 10), 4.0);
  EXPECT_LT(poisson_deviation_sigma(0, 30), -4.0);
  EXPECT_NEAR(poisson_deviation_sigma(10100, 10000), 1.0, 0.02);
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
}
