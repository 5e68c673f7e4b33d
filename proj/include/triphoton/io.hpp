#pragma once

// File formats: TPE1 binary event files, CSV grids and traces, JSON reports.

#include <array>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "triphoton/coincidence.hpp"
#include "triphoton/correlation.hpp"
#include "triphoton/error.hpp"
#include "triphoton/eventsim.hpp"
#include "triphoton/grid.hpp"
#include "triphoton/susceptibility.hpp"

namespace triphoton {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// TPE1 event files
//
// header (32 bytes, little-endian)
//   0  char[4]  "TPE1"
//   4  u16      version (1)
//   6  u16      header length (32)
//   8  u64      seed
//   16 u64      duration_ps
//   24 u16      channel count
//   26 u16      flags, bit 0 = origin tags present
//   28 u32      reserved
// record (16 bytes): u64 timestamp_ps, u8 channel, u8 flags (origin), 6 reserved

struct EventFileHeader {
  std::uint16_t version = 1;
  std::uint16_t header_length = 32;
  std::uint64_t seed = 0;
  std::uint64_t duration_ps = 0;
  std::uint16_t channels = 4;
  bool origin_tags = false;
};

namespace detail {

inline void put_le(std::string& b, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) b.push_back(char((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

class EventFileWriter {
 public:
  EventFileWriter(const std::string& path, const EventFileHeader& h) : out_(path, std::ios::binary), h_(h) {
    if (!out_) throw FormatError("cannot open " + path + " for writing");
    std::string b = "TPE1";
    detail::put_le(b, h.version, 2);
    detail::put_le(b, 32, 2);
    detail::put_le(b, h.seed, 8);
    detail::put_le(b, h.duration_ps, 8);
    detail::put_le(b, h.channels, 2);
    detail::put_le(b, h.origin_tags ? 1 : 0, 2);
    detail::put_le(b, 0, 4);
    out_.write(b.data(), std::streamsize(b.size()));
  }

  void write(const EventRecord& e) {
    if (e.timestamp_ps < last_) throw FormatError("records must be written in time order");
    last_ = e.timestamp_ps;
    std::string b;
    b.reserve(16);
    detail::put_le(b, e.timestamp_ps, 8);
    b.push_back(char(e.channel));
    b.push_back(char(h_.origin_tags ? std::uint8_t(e.origin) : 0));
    b.append(6, '\0');
    out_.write(b.data(), 16);
    ++count_;
  }
  void write(const EventStream& s) {
    for (const auto& e : s) write(e);
  }
  std::uint64_t count() const { return count_; }
  void close() {
    out_.close();
    if (!out_) throw FormatError("event file write failed");
  }

 private:
  std::ofstream out_;
  EventFileHeader h_;
  std::uint64_t last_ = 0, count_ = 0;
};

inline void write_event_file(const std::string& path, const EventStream& s, const EventFileHeader& h) {
  EventFileWriter w(path, h);
  w.write(s);
  w.close();
}

struct EventFile {
  EventFileHeader header;
  EventStream events;
};

/// Reads records in blocks; memory stays bounded for long runs.
class EventFileReader {
 public:
  explicit EventFileReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw FormatError("cannot open " + path);
    unsigned char h[32];
    if (!in_.read(reinterpret_cast<char*>(h), 32) || std::memcmp(h, "TPE1", 4) != 0)
      throw FormatError(path + ": not a TPE1 event file");
    header_.version = std::uint16_t(detail::get_le(h + 4, 2));
    header_.header_length = std::uint16_t(detail::get_le(h + 6, 2));
    if (header_.version != 1) throw FormatError(path + ": unsupported format version");
    header_.seed = detail::get_le(h + 8, 8);
    header_.duration_ps = detail::get_le(h + 16, 8);
    header_.channels = std::uint16_t(detail::get_le(h + 24, 2));
    header_.origin_tags = detail::get_le(h + 26, 2) & 1;
    in_.seekg(0, std::ios::end);
    const auto size = std::uint64_t(in_.tellg());
    if (header_.header_length < 32 || header_.header_length > size) throw FormatError(path + ": bad header length");
    if ((size - header_.header_length) % 16) throw FormatError(path + ": truncated record");
    records_ = (size - header_.header_length) / 16;
    in_.seekg(header_.header_length);
  }

  const EventFileHeader& header() const { return header_; }
  std::uint64_t records() const { return records_; }

  /// Replaces `out` with up to `max` records; false once the file is exhausted.
  bool next(EventStream& out, std::size_t max = 1 << 16) {
    out.clear();
    const std::size_t n = std::size_t(std::min<std::uint64_t>(max, records_ - read_));
    if (n == 0) return false;
    buf_.resize(16 * n);
    if (!in_.read(reinterpret_cast<char*>(buf_.data()), std::streamsize(buf_.size())))
      throw FormatError(path_ + ": read failed");
    out.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const unsigned char* r = buf_.data() + 16 * k;
      auto& e = out[k];
      e.timestamp_ps = detail::get_le(r, 8);
      e.channel = r[8];
      e.origin = Origin(r[9]);
      if (e.timestamp_ps < last_) throw FormatError(path_ + ": records not sorted");
      last_ = e.timestamp_ps;
    }
    read_ += n;
    return true;
  }

 private:
  std::string path_;
  std::ifstream in_;
  EventFileHeader header_;
  std::uint64_t records_ = 0, read_ = 0, last_ = 0;
  std::vector<unsigned char> buf_;
};

inline EventFile read_event_file(const std::string& path) {
  EventFileReader r(path);
  EventFile f;
  f.header = r.header();
  f.events.reserve(std::size_t(r.records()));
  EventStream block;
  while (r.next(block)) f.events.insert(f.events.end(), block.begin(), block.end());
  return f;
}

// ---------------------------------------------------------------------------
// CSV grids and traces

struct CsvMeta {
  std::string kind;
  std::string scale = "1";
  std::string params;
  std::string provenance;
  std::vector<std::string> extra;  // free-form "# key: value" lines
};

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string axis_line(const char* tag, const Axis& a) {
  return std::string("# ") + tag + ": " + a.name + " " + a.unit + " " + fmt17(a.start) + " " + fmt17(a.step) + " " +
         std::to_string(a.size) + "\n";
}

inline Axis parse_axis(const std::string& rest) {
  std::istringstream is(rest);
  Axis a;
  std::string start, step;
  if (!(is >> a.name >> a.unit >> start >> step >> a.size)) throw FormatError("bad axis line: " + rest);
  a.start = std::stod(start);
  a.step = std::stod(step);
  return a;
}

struct CsvText {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::vector<double>> rows;
};

inline CsvText read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  CsvText t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto c = line.find(':');
      if (c == std::string::npos) continue;
      std::string key = line.substr(1, c - 1), val = line.substr(c + 1);
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(' '), b = s.find_last_not_of(' ');
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      t.meta.emplace_back(trim(key), trim(val));
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::string meta_value(const CsvText& t, const std::string& key) {
  for (const auto& [k, v] : t.meta)
    if (k == key) return v;
  throw FormatError("missing '" + key + "' header line");
}

inline std::string header(const CsvMeta& m) {
  std::string s = "# triphoton " + m.kind + "\n";
  s += "# scale: " + m.scale + "\n";
  if (!m.params.empty()) s += "# params: " + m.params + "\n";
  if (!m.provenance.empty()) s += "# provenance: " + m.provenance + "\n";
  for (const auto& e : m.extra) s += "# " + e + "\n";
  return s;
}

}  // namespace detail

template <class T>
std::string grid_csv(const Grid2D<T>& g, CsvMeta meta) {
  constexpr bool complex = std::is_same_v<T, std::complex<double>>;
  meta.kind = complex ? "complex-grid" : "real-grid";
  if (meta.provenance.empty()) meta.provenance = g.provenance;
  std::string s = detail::header(meta);
  s += detail::axis_line("axis1", g.axis1);
  s += detail::axis_line("axis2", g.axis2);
  s += complex ? "# columns: axis1,axis2,real,imag\n" : "# columns: axis1,axis2,value\n";
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) {
      s += detail::fmt17(g.axis1[i]) + "," + detail::fmt17(g.axis2[j]) + ",";
      if constexpr (complex)
        s += detail::fmt17(g(i, j).real()) + "," + detail::fmt17(g(i, j).imag()) + "\n";
      else
        s += detail::fmt17(g(i, j)) + "\n";
    }
  return s;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw FormatError("write failed: " + path);
}

template <class T>
void write_grid_csv(const std::string& path, const Grid2D<T>& g, const CsvMeta& meta = {}) {
  write_text(path, grid_csv(g, meta));
}

template <class T>
Grid2D<T> read_grid_csv(const std::string& path, CsvMeta* meta = nullptr) {
  constexpr bool complex = std::is_same_v<T, std::complex<double>>;
  const auto t = detail::read_csv(path);
  Grid2D<T> g(detail::parse_axis(detail::meta_value(t, "axis1")), detail::parse_axis(detail::meta_value(t, "axis2")));
  if (t.rows.size() != g.values.size()) throw FormatError(path + ": row count does not match the axes");
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto& r = t.rows[k];
    if (r.size() != (complex ? 4u : 3u)) throw FormatError(path + ": wrong column count");
    if constexpr (complex)
      g.values[k] = {r[2], r[3]};
    else
      g.values[k] = r[2];
  }
  for (const auto& [k, v] : t.meta)
    if (k == "provenance") g.provenance = v;
  if (meta) {
    for (const auto& [k, v] : t.meta) {
      if (k == "scale") meta->scale = v;
      if (k == "params") meta->params = v;
      if (k == "provenance") meta->provenance = v;
    }
  }
  return g;
}

inline std::string trace_csv(const ConditionalTrace& tr, CsvMeta meta) {
  meta.kind = "trace";
  meta.scale = detail::fmt17(tr.scale);
  meta.extra.push_back(std::string("trace-kind: ") + to_string(tr.kind));
  if (!tr.line_spec.empty()) meta.extra.push_back("line: " + tr.line_spec);
  std::string s = detail::header(meta);
  s += detail::axis_line("axis", tr.axis);
  s += "# columns: axis,value\n";
  for (std::size_t i = 0; i < tr.values.size(); ++i)
    s += detail::fmt17(tr.axis[i]) + "," + detail::fmt17(tr.values[i]) + "\n";
  return s;
}

inline ConditionalTrace read_trace_csv(const std::string& path) {
  const auto t = detail::read_csv(path);
  ConditionalTrace tr;
  tr.axis = detail::parse_axis(detail::meta_value(t, "axis"));
  tr.scale = std::stod(detail::meta_value(t, "scale"));
  if (t.rows.size() != tr.axis.size) throw FormatError(path + ": row count does not match the axis");
  for (const auto& r : t.rows) {
    if (r.size() != 2) throw FormatError(path + ": wrong column count");
    tr.values.push_back(r[1]);
  }
  const std::string kind = detail::meta_value(t, "trace-kind");
  for (auto k : {TraceKind::trace_out_s3, TraceKind::trace_out_s2, TraceKind::trace_out_s1, TraceKind::fixed_line})
    if (kind == to_string(k)) tr.kind = k;
  for (const auto& [k, v] : t.meta)
    if (k == "line") tr.line_spec = v;
  return tr;
}

/// One row per offset: delta, Re chi, Im chi, n, v_group (SI units).
inline std::string dispersion_csv(const DispersionProfile& d, CsvMeta meta) {
  meta.kind = "dispersion";
  std::string s = detail::header(meta);
  s += detail::axis_line("axis", d.delta_axis);
  s += "# columns: delta,chi_real,chi_imag,n,v_group\n";
  for (std::size_t i = 0; i < d.chi.size(); ++i)
    s += detail::fmt17(d.delta_axis[i]) + "," + detail::fmt17(d.chi[i].real()) + "," + detail::fmt17(d.chi[i].imag()) +
         "," + detail::fmt17(d.n[i]) + "," + detail::fmt17(d.v_group[i]) + "\n";
  return s;
}

/// Histogram counts as a real grid CSV, floor and method in the header.
inline std::string histogram_csv(const CoincidenceHistogram2D& h, CsvMeta meta) {
  meta.extra.push_back(std::string("method: ") + to_string(h.method));
  meta.extra.push_back(std::string("stop-policy: ") + to_string(h.policy));
  meta.extra.push_back("duration: " + detail::fmt17(h.duration));
  meta.extra.push_back("floor-per-bin: " + detail::fmt17(h.floor_estimate));
  RealGrid2D g = to_real(h);
  g.provenance = "coincidence histogram";
  return grid_csv(g, meta);
}

inline nlohmann::ordered_json to_json(const RatesReport& r) {
  nlohmann::ordered_json j;
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "nan";
  };
  j["triplet_rate_per_min"] = num(r.triplet_rate_per_min);
  j["triplet_rate_error"] = num(r.triplet_rate_error);
  j["accidental_rate_per_min"] = num(r.accidental_rate_per_min);
  j["accidental_rate_error"] = num(r.accidental_rate_error);
  j["floor_per_bin"] = num(r.floor_per_bin);
  j["total_counts"] = r.total_counts;
  j["g3_peak"] = num(r.g3_peak);
  j["g3_error"] = num(r.g3_error);
  j["cauchy_schwarz_factor"] = num(r.cauchy_schwarz_factor);
  j["cauchy_schwarz_error"] = num(r.cauchy_schwarz_error);
  j["cauchy_schwarz_infinite"] = r.cauchy_schwarz_infinite;
  j["visibility"] = num(r.visibility);
  auto periods = nlohmann::ordered_json::array();
  const char* names[] = {"tau21", "tau31"};
  for (std::size_t k = 0; k < r.dominant_periods.size(); ++k)
    periods.push_back({{"trace", k < 2 ? names[k] : "other"},
                       {"period_s", num(r.dominant_periods[k][0])},
                       {"confidence", num(r.dominant_periods[k][1])}});
  j["dominant_periods"] = periods;
  return j;
}

}  // namespace triphoton
