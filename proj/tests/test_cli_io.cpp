#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "triphoton/config.hpp"
#include "triphoton/io.hpp"

using namespace triphoton;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("triphoton_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  fs::path dir;
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void expect_config_error(const std::string& text, const std::string& key, int line, const std::string& fragment) {
  try {
    parse_config_text(text);
    ADD_FAILURE() << "accepted: " << text;
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), key) << e.what();
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

EventStream sample_stream() {
  SourceConfig c;
  c.triplet_rate = 0;
  c.duration = 0.05;
  c.diagnose_rate = 1e4;
  return generate_stream(c);
}

}  // namespace

TEST(Config, EmptyFileGivesDefaults) {
  const auto c = parse_config_text("");
  const auto ref = presets::fig_s2a();
  EXPECT_EQ(c.physics.hash(), ref.hash());
  EXPECT_DOUBLE_EQ(c.analysis.window, 195e-9);
  EXPECT_DOUBLE_EQ(c.analysis.bin, 0.25e-9);
  EXPECT_DOUBLE_EQ(c.analysis.delay_offset, 150e-9);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(parse_config("").physics.hash(), ref.hash());
}

TEST(Config, UnitConversions) {
  const auto c = parse_config_text("delta2 = -150 MHz\ntemperature = 80 C\n");
  EXPECT_DOUBLE_EQ(c.physics.drive.delta[1], -2 * std::numbers::pi * 1.5e8);
  EXPECT_DOUBLE_EQ(c.physics.cell.temperature, 353.15);
  const auto d = parse_config_text("temperature = 388.15 K  # 115 C\ncell_length = 7 cm\ndelta1 = -2 GHz\n");
  EXPECT_DOUBLE_EQ(d.physics.cell.temperature, 388.15);
  EXPECT_DOUBLE_EQ(d.physics.cell.length, 0.07);
  EXPECT_DOUBLE_EQ(d.physics.drive.delta[0], ghz(-2.0));
  const auto e = parse_config_text("power2 = 7 mW\n");
  EXPECT_NEAR(to_mhz(e.physics.drive.omega[1]), 363.9471115423229, 1e-6);
  const auto f = parse_config_text("window = 100 ns\nbin = 500 ps\n");
  EXPECT_DOUBLE_EQ(f.analysis.window, 100e-9);
  EXPECT_DOUBLE_EQ(f.analysis.bin, 500e-12);
}

TEST(Config, ErrorsNameKeyAndLine) {
  expect_config_error("\nbogus = 3\n", "bogus", 2, "unknown key");
  expect_config_error("delta2 = -150\n", "delta2", 1, "missing unit");
  expect_config_error("delta2 = -150 furlongs\n", "delta2", 1, "unknown unit");
  expect_config_error("delta2 = abc MHz\n", "delta2", 1, "expected a number");
  expect_config_error("temperature = -400 C\n", "temperature", 1, "");
  expect_config_error("seed = 1\n# c\nseed = 2\n", "seed", 3, "twice");
  expect_config_error("density = 1e11 cm^-3\nod = 4.6\n", "od", 0, "either density or od");
  expect_config_error("no equals sign\n", "", 1, "key = value");
  expect_config_error("omega2 = 500 MHz\n", "omega2", 0, "rabi_source = direct");
}

TEST(Config, DirectRabiAndOpticalDepth) {
  const auto c = parse_config_text("rabi_source = direct\nomega2 = 500 MHz\n");
  EXPECT_NEAR(to_mhz(c.physics.drive.omega[1]), 500.0, 1e-9);
  EXPECT_FALSE(c.physics.drive.power.has_value());
  const auto d = parse_config_text("temperature = 115 C\nod = 45.7\n");
  EXPECT_NEAR(d.physics.cell.od, 45.7, 1e-9);
  EXPECT_GT(d.physics.cell.density, parse_config_text("").physics.cell.density);
}

TEST(Config, OverridesReplaceFileValues) {
  const auto c = parse_config_text("seed = 4\n", {{"seed", "9"}, {"power2", "15 mW"}});
  EXPECT_EQ(c.seed, 9u);
  EXPECT_NEAR(to_mhz(c.physics.drive.omega[1]), 870.0 * std::sqrt(15.0 / 40.0), 1e-6);
  EXPECT_EQ(spaced_quantity("5mW"), "5 mW");
  EXPECT_EQ(spaced_quantity("2.5 GHz"), "2.5 GHz");
  EXPECT_EQ(spaced_quantity("12"), "12");
  EXPECT_THROW(spaced_quantity("mW"), ConfigError);
}

TEST(Config, DumpIsAFixedPoint) {
  const auto c = parse_config_text("power2 = 7 mW\ntemperature = 100 C\nmethod = delayed\nseed = 77\n");
  const std::string a = dump_config(c);
  const auto back = parse_config_text(a);
  EXPECT_EQ(dump_config(back), a);
  for (int j = 0; j < 3; ++j)
    EXPECT_NEAR(back.physics.drive.omega[j], c.physics.drive.omega[j], 1e-12 * c.physics.drive.omega[j]);
  EXPECT_NEAR(back.physics.cell.density, c.physics.cell.density, 1e-12 * c.physics.cell.density);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.analysis.method, c.analysis.method);
  EXPECT_EQ(dump_config(parse_config_text(dump_config(parse_config_text("")))), dump_config(parse_config_text("")));
  const auto lines = config_header_lines(c);
  ASSERT_FALSE(lines.empty());
  EXPECT_EQ(lines.front().rfind("config: ", 0), 0u);
}

TEST_F(TempDir, EventFileRoundTrip) {
  const auto s = sample_stream();
  ASSERT_GT(s.size(), 100u);
  const EventFileHeader h{1, 32, 42, 50000000000ull, 4, true};
  write_event_file(path("a.tpe"), s, h);
  EXPECT_EQ(fs::file_size(path("a.tpe")), 32 + 16 * s.size());
  const auto f = read_event_file(path("a.tpe"));
  EXPECT_EQ(f.events, s);
  EXPECT_EQ(f.header.seed, 42u);
  EXPECT_EQ(f.header.duration_ps, 50000000000ull);
  EXPECT_TRUE(f.header.origin_tags);
  write_event_file(path("b.tpe"), f.events, f.header);
  EXPECT_EQ(slurp(path("a.tpe")), slurp(path("b.tpe")));
  // untagged files drop the origin byte
  write_event_file(path("c.tpe"), s, {1, 32, 42, 50000000000ull, 4, false});
  EXPECT_EQ(read_event_file(path("c.tpe")).events, strip_origin(s));
}

TEST_F(TempDir, EventFileStreamingReader) {
  const auto s = sample_stream();
  write_event_file(path("a.tpe"), s, {1, 32, 1, 50000000000ull, 4, true});
  EventFileReader r(path("a.tpe"));
  EXPECT_EQ(r.records(), s.size());
  EventStream all, block;
  std::size_t blocks = 0;
  while (r.next(block, 97)) {
    EXPECT_LE(block.size(), 97u);
    all.insert(all.end(), block.begin(), block.end());
    ++blocks;
  }
  EXPECT_EQ(all, s);
  EXPECT_EQ(blocks, (s.size() + 96) / 97);
}

TEST_F(TempDir, EventFileCorruption) {
  const auto s = sample_stream();
  write_event_file(path("a.tpe"), s, {1, 32, 1, 50000000000ull, 4, true});
  std::string bytes = slurp(path("a.tpe"));

  std::string bad = bytes;
  bad[0] = 'X';
  std::ofstream(path("magic.tpe"), std::ios::binary) << bad;
  EXPECT_THROW(read_event_file(path("magic.tpe")), FormatError);

  std::ofstream(path("trunc.tpe"), std::ios::binary) << bytes.substr(0, bytes.size() - 5);
  EXPECT_THROW(read_event_file(path("trunc.tpe")), FormatError);

  bad = bytes;
  bad[4] = 2;
  std::ofstream(path("ver.tpe"), std::ios::binary) << bad;
  EXPECT_THROW(read_event_file(path("ver.tpe")), FormatError);

  bad = bytes;
  std::swap_ranges(bad.begin() + 32, bad.begin() + 48, bad.begin() + 48 + 16 * 10);
  std::ofstream(path("order.tpe"), std::ios::binary) << bad;
  EXPECT_THROW(read_event_file(path("order.tpe")), FormatError);

  EXPECT_THROW(read_event_file(path("missing.tpe")), FormatError);
  EventStream unsorted{{100, 1, Origin::none}, {50, 2, Origin::none}};
  EXPECT_THROW(write_event_file(path("u.tpe"), unsorted, {}), FormatError);
}

TEST_F(TempDir, GridCsvRoundTrip) {
  ComplexGrid2D g(Axis::linspace("tau21", "s", -1e-9, 3e-9, 7), Axis::linspace("tau31", "s", 0, 20e-9, 5));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1e-7);
  for (auto& z : g.values) z = {n(rng), n(rng)};
  g.provenance = "test grid";
  write_grid_csv(path("g.csv"), g, {"", "2.5", "abc123", "", {"note: x"}});
  CsvMeta meta;
  const auto h = read_grid_csv<cd>(path("g.csv"), &meta);
  EXPECT_EQ(h.values, g.values);
  EXPECT_EQ(h.axis1.start, g.axis1.start);
  EXPECT_EQ(h.axis1.step, g.axis1.step);
  EXPECT_EQ(h.axis2.size, g.axis2.size);
  EXPECT_EQ(meta.scale, "2.5");
  EXPECT_EQ(meta.params, "abc123");
  EXPECT_EQ(h.provenance, "test grid");

  RealGrid2D r(g.axis1, g.axis2);
  for (std::size_t k = 0; k < r.values.size(); ++k) r.values[k] = std::norm(g.values[k]) * 1e13 + 1.0 / 3;
  write_grid_csv(path("r.csv"), r);
  EXPECT_EQ(read_grid_csv<double>(path("r.csv")).values, r.values);
  EXPECT_THROW(read_grid_csv<cd>(path("r.csv")), FormatError);
}

TEST_F(TempDir, GridCsvRejectsDamage) {
  RealGrid2D r(Axis::linspace("a", "s", 0, 1, 3), Axis::linspace("b", "s", 0, 1, 2));
  write_grid_csv(path("r.csv"), r);
  std::string t = slurp(path("r.csv"));
  std::ofstream(path("short.csv"), std::ios::binary) << t.substr(0, t.rfind('\n', t.size() - 2) + 1);
  EXPECT_THROW(read_grid_csv<double>(path("short.csv")), FormatError);
  std::ofstream(path("noaxis.csv"), std::ios::binary) << "# triphoton real-grid\n0,0,1\n";
  EXPECT_THROW(read_grid_csv<double>(path("noaxis.csv")), FormatError);
}

TEST_F(TempDir, TraceCsvRoundTrip) {
  ConditionalTrace tr;
  tr.axis = Axis::linspace("tau21", "s", 0, 20e-9, 33);
  for (std::size_t i = 0; i < tr.axis.size; ++i) tr.values.push_back(std::exp(-double(i) / 7.0));
  tr.kind = TraceKind::fixed_line;
  tr.line_spec = "tau21+tau31=2e-08";
  tr.scale = 0.123;
  write_text(path("t.csv"), trace_csv(tr, {}));
  const auto back = read_trace_csv(path("t.csv"));
  EXPECT_EQ(back.values, tr.values);
  EXPECT_EQ(back.kind, tr.kind);
  EXPECT_EQ(back.line_spec, tr.line_spec);
  EXPECT_EQ(back.scale, tr.scale);
  EXPECT_EQ(back.axis.step, tr.axis.step);
}

TEST(Formats, DispersionCsv) {
  const Axis ax = Axis::linspace("delta", "rad/s", -ghz(1.0), ghz(1.0), 64);
  const auto d = dispersion_profile(EmittedMode::S2, ax, presets::fig_s2a());
  const auto s = dispersion_csv(d, {});
  EXPECT_NE(s.find("# triphoton dispersion"), std::string::npos);
  EXPECT_NE(s.find("# columns: delta,chi_real,chi_imag,n,v_group"), std::string::npos);
  EXPECT_EQ(std::size_t(std::count(s.begin(), s.end(), '\n')), 64u + 4u);
}

TEST(Formats, RatesJson) {
  RatesReport r;
  r.triplet_rate_per_min = 101.5;
  r.cauchy_schwarz_factor = std::numeric_limits<double>::infinity();
  r.cauchy_schwarz_infinite = true;
  r.dominant_periods = {{6e-9, 0.9}, {1.7e-9, 0.5}};
  const auto j = to_json(r);
  EXPECT_EQ(j["triplet_rate_per_min"].get<double>(), 101.5);
  EXPECT_EQ(j["cauchy_schwarz_factor"].get<std::string>(), "inf");
  EXPECT_TRUE(j["cauchy_schwarz_infinite"].get<bool>());
  const auto again = nlohmann::ordered_json::parse(j.dump());
  EXPECT_EQ(again, j);
}
