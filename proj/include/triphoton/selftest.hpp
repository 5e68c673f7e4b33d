#pragma once

// Quick oracle and invariant checks run by `triphoton selftest`.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "triphoton/correlation.hpp"
#include "triphoton/eventsim.hpp"
#include "triphoton/io.hpp"
#include "triphoton/physics.hpp"
#include "triphoton/susceptibility.hpp"

namespace triphoton {

struct SelftestResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline double rel_err(cd a, cd b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline std::string num(const char* f, double v) {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}

}  // namespace detail

inline std::vector<SelftestResult> run_selftest(const std::filesystem::path& scratch) {
  std::vector<SelftestResult> out;
  auto run = [&](const std::string& name, const std::function<SelftestResult()>& f) {
    SelftestResult r;
    try {
      r = f();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("threw: ") + e.what();
    }
    r.name = name;
    out.push_back(r);
  };

  const ExperimentParams p = ExperimentParams(presets::fig_s2a()).finalize();
  VelocityQuadrature riemann;
  riemann.scheme = QuadratureScheme::uniform_riemann;
  riemann.node_count = 20000;

  run("chi5 vs riemann", [&] {
    const Chi5Evaluator a(p), b(p, riemann);
    double worst = 0;
    for (auto [d2, d3] : {std::pair{mhz(-150.0), mhz(50.0)}, {mhz(400.0), mhz(-300.0)}, {mhz(-900.0), mhz(700.0)}})
      worst = std::max(worst, detail::rel_err(a(d2, d3), b(d2, d3)));
    return SelftestResult{"", worst < 1e-6, detail::num("max rel %.2e", worst)};
  });
  run("linear chi vs riemann", [&] {
    double worst = 0;
    for (auto mode : {EmittedMode::S2, EmittedMode::S3}) {
      const LinearChiEvaluator a(mode, p), b(mode, p, riemann);
      for (double d : {mhz(-500.0), mhz(0.0), mhz(320.0)}) worst = std::max(worst, detail::rel_err(a(d), b(d)));
    }
    return SelftestResult{"", worst < 1e-6, detail::num("max rel %.2e", worst)};
  });
  run("phi invariants", [&] {
    const double L = p.cell.length;
    bool ok = std::abs(longitudinal_phi(0, L) - cd(1)) < 1e-15;
    ok = ok && std::abs(longitudinal_phi(kTwoPi / L, L)) < 1e-12;
    for (int k = -200; k <= 200; ++k) ok = ok && std::abs(longitudinal_phi(k * 7.3 / L, L)) <= 1 + 1e-15;
    return SelftestResult{"", ok, ""};
  });
  run("maxwell-boltzmann norm", [&] {
    const double s = p.thermal_velocity();
    const int n = 20001;
    const double h = 24 * s / (n - 1);
    double acc = 0;
    for (int i = 0; i < n; ++i) acc += maxwell_boltzmann_pdf(-12 * s + i * h, p.cell.temperature) * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
    acc *= h;
    return SelftestResult{"", std::abs(acc - 1) < 1e-9, detail::num("integral - 1 = %.2e", acc - 1)};
  });
  run("detuning sum", [&] {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1e10, 1e10);
    bool ok = true;
    for (int k = 0; k < 100; ++k) {
      const double a = u(rng), b = u(rng);
      const DetuningOffsets o(a, b);
      ok = ok && std::abs(o.delta_s1() + o.delta_s2() + o.delta_s3()) <= 4e-16 * (std::abs(a) + std::abs(b));
    }
    return SelftestResult{"", ok, ""};
  });
  run("transform paths", [&] {
    SpectralGridSpec spec;
    spec.step = mhz(10.0);
    const auto k = spectral_kernel(p, {}, spec);
    const TauGridSpec tau = TauGridSpec::square(0, 20e-9, 8);
    const auto a = transform_kernel(k.kernel, tau, TransformPath::direct);
    const auto b = transform_kernel(k.kernel, tau, TransformPath::fourier);
    double peak = 0, worst = 0;
    for (const auto& z : a.values) peak = std::max(peak, std::abs(z));
    for (std::size_t i = 0; i < a.values.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
    return SelftestResult{"", worst / peak < 1e-4, detail::num("max rel %.2e", worst / peak)};
  });
  run("cauchy-schwarz identity", [&] {
    const double f = cauchy_schwarz_factor(std::sqrt(250.0) * 1.6 * 2.0 * 2.0, {1.6, 2.0, 2.0});
    return SelftestResult{"", std::abs(f - 250.0) < 1e-9, detail::num("factor %.12g", f)};
  });
  run("grid csv round trip", [&] {
    ComplexGrid2D g(Axis::linspace("a", "s", 0, 1, 5), Axis::linspace("b", "s", -1, 1, 3));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    for (auto& z : g.values) z = {n(rng), n(rng)};
    const auto path = (scratch / "selftest_grid.csv").string();
    write_grid_csv(path, g);
    const auto h = read_grid_csv<cd>(path);
    std::filesystem::remove(path);
    return SelftestResult{"", h.values == g.values, ""};
  });
  run("event file round trip", [&] {
    SourceConfig c;
    c.triplet_rate = 0;
    c.duration = 0.01;
    c.diagnose_rate = 1000;
    const auto s = generate_stream(c);
    const auto path = (scratch / "selftest_events.tpe").string();
    write_event_file(path, s, {1, 32, c.seed, 10000000000ull, 4, true});
    const auto f = read_event_file(path);
    std::filesystem::remove(path);
    return SelftestResult{"", f.events == s && !s.empty(), std::to_string(s.size()) + " records"};
  });
  return out;
}

}  // namespace triphoton
