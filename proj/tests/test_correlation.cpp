#include <gtest/gtest.h>

#include <cmath>

#include "triphoton/correlation.hpp"

using namespace triphoton;

namespace {

double max_abs(const std::vector<cd>& v) {
  double m = 0;
  for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

ComplexGrid2D gaussian_kernel(double s, double half, double step) {
  const std::size_t n = std::size_t(std::llround(2 * half / step)) + 1;
  ComplexGrid2D K(Axis{"delta2", "rad/s", -half, step, n}, Axis{"delta3", "rad/s", -half, step, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      K(i, j) = std::exp(-(K.axis1[i] * K.axis1[i] + K.axis2[j] * K.axis2[j]) / (2 * s * s));
  return K;
}

SpectralGridSpec coarse() {
  SpectralGridSpec s;
  s.step = mhz(10.0);
  return s;
}

}  // namespace

TEST(Transform, GaussianKernelMatchesAnalyticAmplitude) {
  const double s = mhz(100.0);
  const auto K = gaussian_kernel(s, 8 * s, mhz(5.0));
  const TauGridSpec tau{-5e-9, 15e-9, 41, -2e-9, 20e-9, 23};
  for (auto path : {TransformPath::direct, TransformPath::fourier}) {
    const auto A = transform_kernel(K, tau, path);
    const double peak = s * s / kTwoPi;
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t j = 0; j < A.cols(); ++j) {
        const double t2 = A.axis1[i], t3 = A.axis2[j];
        const double exact = peak * std::exp(-0.5 * s * s * (t2 * t2 + t3 * t3));
        EXPECT_LT(std::abs(A(i, j) - exact) / peak, 1e-6) << to_string(path) << " " << t2 << " " << t3;
      }
  }
}

TEST(Transform, PhaseShiftedKernelMovesThePeak) {
  const double s = mhz(100.0), t0 = 4e-9;
  auto K = gaussian_kernel(s, 8 * s, mhz(5.0));
  for (std::size_t i = 0; i < K.rows(); ++i)
    for (std::size_t j = 0; j < K.cols(); ++j) K(i, j) *= std::polar(1.0, -K.axis1[i] * t0);
  const auto A = transform_kernel(K, TauGridSpec::square(0, 20e-9, 81), TransformPath::fourier);
  std::size_t best = 0;
  for (std::size_t k = 0; k < A.values.size(); ++k)
    if (std::abs(A.values[k]) > std::abs(A.values[best])) best = k;
  EXPECT_NEAR(A.axis1[best / A.cols()], t0, 1e-12);
  EXPECT_EQ(best % A.cols(), 0u);
}

TEST(Transform, DirectAndFourierPathsAgree) {
  const auto p = presets::fig_s2a();
  const auto k = spectral_kernel(p, {}, coarse());
  const auto tau = TauGridSpec::square(0, 40e-9, 64);
  const auto a = transform_kernel(k.kernel, tau, TransformPath::direct);
  const auto b = transform_kernel(k.kernel, tau, TransformPath::fourier);
  double worst = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  EXPECT_LT(worst / max_abs(a.values), 1e-4);
}

TEST(Transform, NyquistGuard) {
  const auto K = gaussian_kernel(mhz(100.0), mhz(800.0), mhz(50.0));
  try {
    transform_kernel(K, TauGridSpec::square(0, 20e-9, 8), TransformPath::fourier);
    FAIL() << "expected SamplingError";
  } catch (const SamplingError& e) {
    EXPECT_GE(e.required_size(), required_spectral_size(K.axis1.step * double(K.axis1.size - 1), 20e-9));
  }
  EXPECT_NO_THROW(transform_kernel(K, TauGridSpec::square(0, 9e-9, 8), TransformPath::fourier));
}

TEST(Transform, TauSpanMustCoverTwentyNanoseconds) {
  EXPECT_THROW(check_tau_span(TauGridSpec::square(0, 10e-9, 8)), InvalidParameter);
  EXPECT_THROW(check_tau_span(TauGridSpec::square(1e-9, 30e-9, 8)), InvalidParameter);
  EXPECT_NO_THROW(check_tau_span(TauGridSpec::square(-5e-9, 20e-9, 8)));
}

TEST(Kernel, NormalizedAndCentred) {
  const auto p = presets::fig_s2a();
  const auto k = spectral_kernel(p, {}, coarse());
  EXPECT_LE(max_abs(k.kernel.values), 1.0 + 1e-12);
  EXPECT_GT(k.chi_scale, 0.0);
  EXPECT_NEAR(k.delay2, p.cell.length / (2 * PhysicalConstants::c), 0.5 * p.cell.length / PhysicalConstants::c);
  EXPECT_NE(k.kernel.provenance.find(p.hash()), std::string::npos);
  SpectralGridSpec bad;
  bad.step = 0;
  EXPECT_THROW(spectral_kernel(p, {}, bad), InvalidParameter);
}

TEST(Map, NormalizedIntensity) {
  const auto m = triphoton_amplitude_map(TauGridSpec::square(0, 20e-9, 32), presets::fig_s2a(), {}, coarse());
  double top = 0;
  for (std::size_t k = 0; k < m.r3.values.size(); ++k) {
    EXPECT_NEAR(m.r3.values[k], std::norm(m.grid.values[k]), 1e-15);
    top = std::max(top, m.r3.values[k]);
  }
  EXPECT_DOUBLE_EQ(top, 1.0);
  EXPECT_GT(m.amplitude_scale, 0.0);
}

TEST(Traces, ClosedFormEqualsMarginalOfFullMap) {
  const auto p = presets::fig_s2a();
  const auto k = spectral_kernel(p, {}, coarse());
  const std::size_t N3 = k.kernel.cols();
  const double period = kTwoPi / k.kernel.axis2.step, dt = period / double(N3);
  const TauGridSpec tau{0, 20e-9, 81, -0.5 * period + 0.5 * dt, 0.5 * period - 0.5 * dt, N3};
  const auto map = CorrelationMap::from_amplitude(transform_kernel(k.kernel, tau, TransformPath::fourier), p.hash());
  const auto marginal = trace_map(map, TraceKind::trace_out_s3);
  const auto closed = conditional_r2_from_kernel(k.kernel, tau.axis21());
  ASSERT_EQ(marginal.values.size(), closed.values.size());
  for (std::size_t i = 0; i < closed.values.size(); ++i) EXPECT_NEAR(marginal.values[i], closed.values[i], 1e-3);
}

TEST(Traces, MarginalsOfSyntheticMap) {
  RealGrid2D r(Axis::linspace("tau21", "s", 0, 3e-9, 4), Axis::linspace("tau31", "s", 0, 2e-9, 3));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) r(i, j) = double(i + 1) * double(j + 1);
  CorrelationMap m;
  m.r3 = r;
  const auto a = trace_map(m, TraceKind::trace_out_s3);
  EXPECT_EQ(a.values, (std::vector<double>{0.25, 0.5, 0.75, 1.0}));
  EXPECT_DOUBLE_EQ(a.scale, 24.0);
  const auto b = trace_map(m, TraceKind::trace_out_s2);
  EXPECT_EQ(b.values, (std::vector<double>{1.0 / 3, 2.0 / 3, 1.0}));
  const auto c = trace_map(m, TraceKind::trace_out_s1);
  ASSERT_EQ(c.values.size(), 6u);
  EXPECT_NEAR(c.axis.start, -3e-9, 1e-21);
  // tau31 - tau21 = -3 ns only at (i=3, j=0)
  EXPECT_DOUBLE_EQ(c.values[0] * c.scale, 4.0);
  EXPECT_THROW(trace_map(m, TraceKind::fixed_line), InvalidParameter);
  const auto d = diagonal_cut(m, 2e-9);
  EXPECT_EQ(d.values.size(), 3u);
  EXPECT_DOUBLE_EQ(d.values[0], 3.0);
  EXPECT_THROW(diagonal_cut(m, 50e-9), RangeError);
}

TEST(Metrics, SpectralPeaksOfTwoTones) {
  ConditionalTrace tr;
  tr.axis = Axis::linspace("tau21", "s", 0, 100e-9, 2001);
  for (std::size_t i = 0; i < tr.axis.size; ++i) {
    const double t = tr.axis[i];
    tr.values.push_back(2 + std::cos(kTwoPi * t / 6.2e-9) + 0.6 * std::cos(kTwoPi * t / 1.7e-9));
  }
  const auto pk = spectral_peaks(tr);
  ASSERT_GE(pk.size(), 2u);
  EXPECT_EQ(significant_peak_count(pk), 2u);
  EXPECT_NEAR(pk[0].period, 6.2e-9, 0.05e-9);
  EXPECT_NEAR(pk[1].period, 1.7e-9, 0.02e-9);
  EXPECT_NEAR(pk[1].relative, 0.6, 0.05);
}

TEST(Metrics, PeriodAndVisibilityOfDampedCosine) {
  ConditionalTrace tr;
  tr.axis = Axis::linspace("tau31", "s", 0, 30e-9, 1501);
  for (std::size_t i = 0; i < tr.axis.size; ++i) {
    const double t = tr.axis[i];
    tr.values.push_back(std::exp(-t / 20e-9) * std::pow(std::cos(kPi * t / 1.7e-9), 2));
  }
  tr.normalize();
  const auto e = oscillation_period(tr);
  EXPECT_NEAR(e.period, 1.7e-9, 0.02e-9);
  EXPECT_NEAR(e.spectral_period, 1.7e-9, 0.05e-9);
  EXPECT_GT(e.confidence, 0.8);
  EXPECT_GT(visibility(tr), 0.99);
  ConditionalTrace flat;
  flat.axis = Axis::linspace("t", "s", 0, 1, 16);
  flat.values.assign(16, 1.0);
  EXPECT_EQ(visibility(flat), 0.0);
  EXPECT_EQ(significant_peak_count(spectral_peaks(flat)), 0u);
}

TEST(CauchySchwarz, AlgebraicIdentity) {
  EXPECT_NEAR(cauchy_schwarz_factor(std::sqrt(250.0) * 6.4, {1.6, 2.0, 2.0}), 250.0, 1e-9);
  EXPECT_NEAR(cauchy_schwarz_factor(160.0, {1.6, 2.0, 2.0}), 625.0, 1e-9);
  EXPECT_DOUBLE_EQ(cauchy_schwarz_factor(1.0, {1.0, 1.0, 1.0}), 1.0);
  EXPECT_THROW(cauchy_schwarz_factor(0.0, {1.6, 2.0, 2.0}), InvalidParameter);
  EXPECT_THROW(cauchy_schwarz_factor(10.0, {1.6, 0.0, 2.0}), InvalidParameter);
}
