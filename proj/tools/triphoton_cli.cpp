#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "triphoton/coincidence.hpp"
#include "triphoton/config.hpp"
#include "triphoton/correlation.hpp"
#include "triphoton/eventsim.hpp"
#include "triphoton/io.hpp"
#include "triphoton/selftest.hpp"
#include "triphoton/susceptibility.hpp"

namespace fs = std::filesystem;
using namespace triphoton;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::vector<std::string> set;  // key=value overrides
};

std::vector<std::pair<std::string, std::string>> split_overrides(const std::vector<std::string>& kv) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : kv) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'", "", 0);
    auto key = s.substr(0, eq), value = s.substr(eq + 1);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    while (!value.empty() && value.front() == ' ') value.erase(0, 1);
    out.emplace_back(key, value);
  }
  return out;
}

RunConfig load(const Common& c, std::vector<std::pair<std::string, std::string>> extra = {}) {
  auto ov = split_overrides(c.set);
  ov.insert(ov.end(), extra.begin(), extra.end());
  return parse_config(c.config, ov);
}

fs::path out_dir(const Common& c, const RunConfig& cfg) {
  fs::path d = c.out.empty() ? fs::path(cfg.output_dir) : fs::path(c.out);
  fs::create_directories(d);
  return d;
}

CsvMeta meta_for(const RunConfig& cfg, const std::string& provenance = {}) {
  CsvMeta m;
  m.params = cfg.physics.hash();
  m.provenance = provenance;
  m.extra = config_header_lines(cfg);
  return m;
}

double mhz_of(double w) { return w / kTwoPi / 1e6; }

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "config file (key = value)");
  sub->add_option("--out", c.out, "output directory (default: output_dir from the config)");
  sub->add_option("--set", c.set, "override a config key, e.g. --set \"power2=20 mW\"");
}

int cmd_chi5(const Common& c) {
  const auto cfg = load(c);
  const auto g = chi5_map(cfg.chi5_grid, cfg.physics, cfg.quadrature, cfg.threads);
  const auto path = out_dir(c, cfg) / "chi5_map.csv";
  write_grid_csv(path.string(), g, meta_for(cfg));
  std::size_t k = 0;
  for (std::size_t i = 1; i < g.values.size(); ++i)
    if (std::abs(g.values[i]) > std::abs(g.values[k])) k = i;
  std::printf("chi5-map: %zux%zu -> %s, peak |chi5| %.4g at (%.1f, %.1f) MHz\n", g.rows(), g.cols(), path.c_str(),
              std::abs(g.values[k]), mhz_of(g.axis1[k / g.cols()]), mhz_of(g.axis2[k % g.cols()]));
  return 0;
}

int cmd_linear(const Common& c) {
  const auto cfg = load(c);
  const auto dir = out_dir(c, cfg);
  const Axis ax = Axis::linspace("delta", "rad/s", cfg.response_min, cfg.response_max, cfg.response_points);
  double vmin = 1e300;
  for (auto [mode, name] : {std::pair{EmittedMode::S2, "s2"}, {EmittedMode::S3, "s3"}}) {
    const auto d = dispersion_profile(mode, ax, cfg.physics, cfg.quadrature);
    auto m = meta_for(cfg);
    m.extra.insert(m.extra.begin(), std::string("mode: ") + (mode == EmittedMode::S2 ? "S2" : "S3"));
    write_text((dir / (std::string("linear_response_") + name + ".csv")).string(), dispersion_csv(d, m));
    vmin = std::min(vmin, d.v_group[std::size_t(std::lround(-ax.start / ax.step))]);
  }
  std::printf("linear-response: %zu points -> %s/linear_response_{s2,s3}.csv, min v_g at zero offset %.4g m/s\n",
              ax.size, dir.c_str(), vmin);
  return 0;
}

CorrelationMap build_map(const RunConfig& cfg, const TauGridSpec& tau) {
  return triphoton_amplitude_map(tau, cfg.physics, cfg.quadrature, cfg.spectral);
}

int cmd_corr(const Common& c) {
  const auto cfg = load(c);
  const auto map = build_map(cfg, cfg.tau);
  auto m = meta_for(cfg, map.r3.provenance);
  m.scale = detail::fmt17(map.amplitude_scale * map.amplitude_scale);
  const auto path = out_dir(c, cfg) / "correlation_map.csv";
  write_grid_csv(path.string(), map.r3, m);
  std::size_t k = std::size_t(std::max_element(map.r3.values.begin(), map.r3.values.end()) - map.r3.values.begin());
  std::printf("correlation-map: %zux%zu -> %s, peak at (%.3f, %.3f) ns\n", map.r3.rows(), map.r3.cols(), path.c_str(),
              map.r3.axis1[k / map.r3.cols()] * 1e9, map.r3.axis2[k % map.r3.cols()] * 1e9);
  return 0;
}

int cmd_trace(const Common& c, const std::string& kind, const std::string& line, const std::string& map_file) {
  std::vector<std::pair<std::string, std::string>> extra;
  if (!line.empty()) extra.emplace_back("trace_line", spaced_quantity(line));
  const auto cfg = load(c, extra);
  CorrelationMap map;
  if (!map_file.empty()) {
    map.r3 = read_grid_csv<double>(map_file);
  } else {
    map = build_map(cfg, cfg.tau);
  }
  ConditionalTrace tr;
  std::string tag = kind;
  if (kind == "diag") {
    tr = diagonal_cut(map, cfg.trace_line);
  } else {
    TraceKind k;
    if (kind == "trace-out-S3")
      k = TraceKind::trace_out_s3;
    else if (kind == "trace-out-S2")
      k = TraceKind::trace_out_s2;
    else if (kind == "trace-out-S1")
      k = TraceKind::trace_out_s1;
    else
      throw ConfigError("unknown trace kind '" + kind + "'", "--kind", 0);
    tr = trace_map(map, k);
  }
  const auto path = out_dir(c, cfg) / ("trace_" + tag + ".csv");
  write_text(path.string(), trace_csv(tr, meta_for(cfg, map.r3.provenance)));
  const auto pe = oscillation_period(tr);
  std::printf("trace: %s, %zu points -> %s, period %.4g ns, visibility %.3f\n", tag.c_str(), tr.values.size(),
              path.c_str(), pe.period * 1e9, visibility(tr));
  return 0;
}

TauGridSpec simulation_grid(const RunConfig& cfg) {
  const BinSpec b(cfg.analysis.window, cfg.analysis.bin);
  const double w = double(b.window_ps) * 1e-12;
  return TauGridSpec::square(0, w, b.bins + 1);
}

int cmd_simulate(const Common& c, const std::string& duration, const std::string& seed) {
  std::vector<std::pair<std::string, std::string>> extra;
  if (!duration.empty()) extra.emplace_back("duration", spaced_quantity(duration));
  if (!seed.empty()) extra.emplace_back("seed", seed);
  const auto cfg = load(c, extra);
  const SourceConfig src = cfg.simulation.resolved(cfg.analysis.window, cfg.seed);
  const auto map = build_map(cfg, simulation_grid(cfg));
  const auto dir = out_dir(c, cfg);
  const auto path = dir / "events.tpe";
  EventFileHeader h;
  h.seed = cfg.seed;
  h.duration_ps = std::uint64_t(std::llround(src.duration * 1e12));
  h.channels = 4;
  h.origin_tags = cfg.simulation.origin_tags;
  EventFileWriter w(path.string(), h);
  StreamGenerator gen(&map, src);
  EventStream chunk;
  while (gen.next_chunk(chunk)) {
    w.write(chunk);
    chunk.clear();
  }
  w.close();
  const auto& st = gen.stats();
  const std::int64_t wps = BinSpec(cfg.analysis.window, cfg.analysis.bin).window_ps;
  std::uint64_t in_window = 0;
  for (const auto& d : st.triplet_delays_ps)
    if (d[0] >= 0 && d[1] >= 0 && d[0] < wps && d[1] < wps) ++in_window;

  nlohmann::ordered_json j;
  j["events"] = w.count();
  j["seed"] = cfg.seed;
  j["duration_s"] = src.duration;
  j["triplet_rate_emitted_per_s"] = src.triplet_rate;
  j["singles_rate_per_s"] = src.singles_rate;
  j["detected_singles_per_s"] = {src.detected_singles(1), src.detected_singles(2), src.detected_singles(3)};
  j["triplets_emitted"] = st.triplets_emitted;
  j["triplets_detected"] = st.triplets_detected;
  j["triplets_in_window"] = in_window;
  j["channel_counts"] = std::vector<std::uint64_t>(st.channel_counts.begin() + 1, st.channel_counts.end());
  j["map_params"] = map.params_hash;
  j["config"] = config_header_lines(cfg);
  write_text((dir / "events.json").string(), j.dump(2) + "\n");
  std::printf("simulate: %llu events over %.6g s -> %s, %llu triplets detected (%.2f/min in window)\n",
              static_cast<unsigned long long>(w.count()), src.duration, path.c_str(),
              static_cast<unsigned long long>(st.triplets_detected), double(in_window) / (src.duration / 60.0));
  return 0;
}

int cmd_analyze(const Common& c, const std::string& file, const std::string& method) {
  std::vector<std::pair<std::string, std::string>> extra;
  if (!method.empty()) extra.emplace_back("method", method);
  const auto cfg = load(c, extra);
  const auto& a = cfg.analysis;
  EventFileReader r(file);
  const double duration = double(r.header().duration_ps) * 1e-12;
  DirectTripleMatcher direct(a.window, a.bin, a.policy);
  DelayedTripleMatcher delayed(a.window, a.bin, a.delay_offset, a.policy);
  PairwiseMatcher diag(3, 4, a.window, a.bin);
  const bool use_direct = a.method == MatchMethod::direct;
  EventStream block;
  std::uint64_t ch4 = 0;
  while (r.next(block))
    for (const auto& e : block) {
      if (use_direct)
        direct.push(e);
      else
        delayed.push(e);
      diag.push(e);
      ch4 += e.channel == 4;
    }
  auto h = use_direct ? direct.finish(duration) : delayed.finish(duration);
  const auto rep = rates_report(h, a.rates);
  const auto dir = out_dir(c, cfg);
  auto m = meta_for(cfg, "analysis of " + fs::path(file).filename().string());
  write_text((dir / "histogram.csv").string(), histogram_csv(h, m));
  auto sub = subtract_accidentals(h, a.signed_map);
  sub.provenance = "accidental-subtracted histogram";
  write_grid_csv((dir / "subtracted.csv").string(), sub, m);
  auto j = to_json(rep);
  j["method"] = to_string(h.method);
  j["stop_policy"] = to_string(h.policy);
  j["events"] = r.records();
  j["duration_s"] = duration;
  if (ch4 > 0) {
    const auto d = flatness(diag.finish(duration));
    j["diagnose"] = {{"flat", d.flat}, {"max_deviation_sigma", d.max_deviation_sigma}, {"floor_per_bin", d.floor_per_bin}};
  }
  j["config"] = config_header_lines(cfg);
  write_text((dir / "report.json").string(), j.dump(2) + "\n");
  std::printf(
      "analyze: %s, %llu events, triplets %.2f +- %.2f /min, accidentals %.2f +- %.2f /min, CS factor %.4g -> %s\n",
      to_string(h.method), static_cast<unsigned long long>(r.records()), rep.triplet_rate_per_min,
      rep.triplet_rate_error, rep.accidental_rate_per_min, rep.accidental_rate_error, rep.cauchy_schwarz_factor,
      dir.c_str());
  return 0;
}

/// Relative three-photon rate: |Omega1 Omega2 Omega3|^2 times the integral of
/// |chi5 Phi|^2 over the spectral window.
double integrated_rate(const RunConfig& cfg) {
  const auto k = spectral_kernel(cfg.physics, cfg.quadrature, cfg.spectral);
  double acc = 0;
  for (const auto& z : k.kernel.values) acc += std::norm(z);
  acc *= k.chi_scale * k.chi_scale * k.kernel.axis1.step * k.kernel.axis2.step;
  const auto& o = cfg.physics.drive.omega;
  return acc * std::pow(o[0] * o[1] * o[2], 2);
}

int cmd_sweep(const Common& c, const std::string& param, const std::string& from, const std::string& to, int steps) {
  if (steps < 2) throw ConfigError("--steps must be >= 2", "--steps", 0);
  const std::string f = spaced_quantity(from), t = spaced_quantity(to);
  const auto fu = f.find(' '), tu = t.find(' ');
  const std::string unit = fu == std::string::npos ? "" : f.substr(fu + 1);
  if (unit != (tu == std::string::npos ? "" : t.substr(tu + 1)))
    throw ConfigError("--from and --to must use the same unit", param, 0);
  const double lo = std::stod(f), hi = std::stod(t);
  std::vector<double> x, y;
  RunConfig first;
  for (int k = 0; k < steps; ++k) {
    const double v = lo + (hi - lo) * k / (steps - 1);
    const auto cfg = load(c, {{param, detail::fmt(v) + (unit.empty() ? "" : " " + unit)}});
    if (k == 0) first = cfg;
    x.push_back(v);
    y.push_back(integrated_rate(cfg));
  }
  // least-squares line through the rates normalized to the last point
  const double top = y.back() > 0 ? y.back() : 1;
  std::vector<double> yn;
  for (double v : y) yn.push_back(v / top);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(steps);
  for (int k = 0; k < steps; ++k) {
    sx += x[k];
    sy += yn[k];
    sxx += x[k] * x[k];
    sxy += x[k] * yn[k];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx), icpt = (sy - slope * sx) / n;
  bool monotone = true;
  double dev = 0;
  for (int k = 0; k < steps; ++k) {
    if (k > 0 && y[k] < y[k - 1]) monotone = false;
    dev = std::max(dev, std::abs(yn[k] - (icpt + slope * x[k])));
  }
  auto m = meta_for(first);
  m.kind = "sweep";
  m.extra.insert(m.extra.begin(), "sweep: " + param + " " + f + " .. " + t + ", " + std::to_string(steps) + " steps");
  m.extra.insert(m.extra.begin() + 1, "monotone: " + std::string(monotone ? "true" : "false"));
  m.extra.insert(m.extra.begin() + 2, "max-linear-fit-deviation: " + detail::fmt17(dev));
  std::string s = detail::header(m);
  s += "# columns: " + param + (unit.empty() ? "" : "[" + unit + "]") + ",rate,rate_normalized,linear_fit\n";
  for (int k = 0; k < steps; ++k)
    s += detail::fmt17(x[k]) + "," + detail::fmt17(y[k]) + "," + detail::fmt17(yn[k]) + "," +
         detail::fmt17(icpt + slope * x[k]) + "\n";
  const auto path = out_dir(c, first) / "sweep.csv";
  write_text(path.string(), s);
  std::printf("sweep: %s over %d steps -> %s, monotone %s, max deviation from linear fit %.3g\n", param.c_str(), steps,
              path.c_str(), monotone ? "yes" : "no", dev);
  return 0;
}

int cmd_selftest(const Common& c) {
  const auto cfg = load(c);
  const auto res = run_selftest(out_dir(c, cfg));
  int failed = 0;
  for (const auto& r : res) {
    std::printf("%s %s%s%s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.empty() ? "" : ": ",
                r.detail.c_str());
    failed += !r.pass;
  }
  std::printf("selftest: %zu checks, %d failed\n", res.size(), failed);
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Triphoton correlation model, event simulator and coincidence analysis"};
  app.require_subcommand(1);
  Common common;
  std::string kind = "trace-out-S3", line, map_file, duration, seed, file, method, param = "power2", from = "5mW",
              to = "40mW";
  int steps = 8;

  auto* chi = app.add_subcommand("chi5-map", "chi5 grid CSV");
  auto* lin = app.add_subcommand("linear-response", "S2/S3 dispersion profiles");
  auto* cor = app.add_subcommand("correlation-map", "three-photon coincidence map CSV");
  auto* trc = app.add_subcommand("trace", "one-dimensional conditional trace");
  trc->add_option("--kind", kind, "trace-out-S3 | trace-out-S2 | trace-out-S1 | diag");
  trc->add_option("--line", line, "tau21 + tau31 for diag, e.g. 50ns");
  trc->add_option("--map", map_file, "read the map from a correlation-map CSV instead of computing it");
  auto* sim = app.add_subcommand("simulate", "synthetic event file");
  sim->add_option("--duration", duration, "e.g. 60s or 1h");
  sim->add_option("--seed", seed);
  auto* ana = app.add_subcommand("analyze", "three-fold histogram and rates report");
  ana->add_option("eventfile", file)->required();
  ana->add_option("--method", method, "direct | delayed");
  auto* swp = app.add_subcommand("sweep", "integrated rate against one config key");
  swp->add_option("--param", param);
  swp->add_option("--from", from);
  swp->add_option("--to", to);
  swp->add_option("--steps", steps);
  auto* st = app.add_subcommand("selftest", "oracle and invariant checks");
  auto* pd = app.add_subcommand("print-defaults", "resolved default config");
  for (auto* s : {chi, lin, cor, trc, sim, ana, swp, st, pd}) add_common(s, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*chi) return cmd_chi5(common);
    if (*lin) return cmd_linear(common);
    if (*cor) return cmd_corr(common);
    if (*trc) return cmd_trace(common, kind, line, map_file);
    if (*sim) return cmd_simulate(common, duration, seed);
    if (*ana) return cmd_analyze(common, file, method);
    if (*swp) return cmd_sweep(common, param, from, to, steps);
    if (*st) return cmd_selftest(common);
    if (*pd) {
      std::fputs(dump_config(load(common)).c_str(), stdout);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const InvalidParameter& e) {
    std::fprintf(stderr, "error: invalid parameter: %s\n", e.what());
    return 2;
  } catch (const NumericalDomainError& e) {
    std::fprintf(stderr, "numerical error: %s (velocity %g m/s)\n", e.what(), e.velocity());
    return 3;
  } catch (const DispersionDomainError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const SamplingError& e) {
    std::fprintf(stderr, "numerical error: %s (need %zu samples)\n", e.what(), e.required_size());
    return 3;
  } catch (const EstimationError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const RangeError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
