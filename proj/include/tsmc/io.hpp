#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tsmc/common.hpp"

namespace tsmc {

/// Shortest round-trip decimal formatting: CSV artifacts must be
/// byte-identical across runs, and re-parsing must recover the exact double.
inline std::string format_double(double value) {
  char buffer[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buffer, sizeof(buffer), "%.*g", precision, value);
    if (std::strtod(buffer, nullptr) == value) break;
  }
  return buffer;
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

inline void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out << ',';
    out << table.columns[c];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << row[c];
    }
    out << '\n';
  }
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  CsvTable table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream stream(line);
    std::string field;
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (header) {
      table.columns = std::move(fields);
      header = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  return table;
}

// Parameter-matrix container format: fixed little-endian header followed by
// row-major float64 data. layout_id pins the meaning of a parameter vector
// (0 = raw, 1 = open-loop control sequence, 2 = MLP row-major weights then
// biases, layer by layer).
inline constexpr char kParamsMagic[8] = {'T', 'S', 'M', 'C', 'P', 'A', 'R', '\0'};
inline constexpr std::uint32_t kParamsVersion = 1;

enum class ParamsLayout : std::uint32_t {
  raw = 0,
  open_loop_controls = 1,
  mlp_row_major_v1 = 2,
};

inline void write_params(const std::string& path, const Matrix& thetas, ParamsLayout layout) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const std::uint32_t version = kParamsVersion;
  const auto layout_id = static_cast<std::uint32_t>(layout);
  const auto n = static_cast<std::uint32_t>(thetas.rows());
  const auto d = static_cast<std::uint32_t>(thetas.cols());
  out.write(kParamsMagic, sizeof(kParamsMagic));
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&layout_id), 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&d), 4);
  for (Eigen::Index i = 0; i < thetas.rows(); ++i)
    for (Eigen::Index j = 0; j < thetas.cols(); ++j) {
      const double value = thetas(i, j);
      out.write(reinterpret_cast<const char*>(&value), 8);
    }
}

struct ParamsFile {
  Matrix thetas;
  ParamsLayout layout = ParamsLayout::raw;
};

inline ParamsFile read_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  char magic[8];
  std::uint32_t version = 0, layout_id = 0, n = 0, d = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&layout_id), 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&d), 4);
  if (!in || std::memcmp(magic, kParamsMagic, sizeof(magic)) != 0)
    throw std::runtime_error("not a parameter file: " + path);
  if (version != kParamsVersion)
    throw std::runtime_error("unsupported parameter file version in " + path);
  ParamsFile file;
  file.layout = static_cast<ParamsLayout>(layout_id);
  file.thetas.resize(n, d);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < d; ++j) {
      double value;
      in.read(reinterpret_cast<char*>(&value), 8);
      file.thetas(i, j) = value;
    }
  if (!in) throw std::runtime_error("truncated parameter file: " + path);
  return file;
}

// --- Minimal static SVG emission (boxplots and line traces). ---

struct BoxStats {
  std::string label;
  double min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
};

inline std::string svg_boxplot(const std::vector<BoxStats>& boxes, const std::string& title) {
  const double width = 120.0 * static_cast<double>(boxes.size()) + 100.0;
  const double height = 360.0;
  double lo = kInf, hi = -kInf;
  for (const auto& b : boxes) {
    lo = std::min(lo, b.min);
    hi = std::max(hi, b.max);
  }
  if (!(hi > lo)) {
    hi = lo + 1.0;
    lo -= 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto y_of = [&](double v) { return 320.0 - 280.0 * (v - lo) / (hi - lo); };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n";
  svg << "<text x='" << width / 2 << "' y='20' text-anchor='middle' font-size='14'>" << title
      << "</text>\n";
  svg << "<line x1='60' y1='40' x2='60' y2='320' stroke='black'/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = lo + (hi - lo) * tick / 4.0;
    svg << "<text x='55' y='" << y_of(v) + 4 << "' text-anchor='end' font-size='10'>"
        << format_double(v).substr(0, 8) << "</text>\n";
    svg << "<line x1='57' y1='" << y_of(v) << "' x2='63' y2='" << y_of(v)
        << "' stroke='black'/>\n";
  }
  double x = 100.0;
  for (const auto& b : boxes) {
    const double cx = x + 40.0;
    svg << "<line x1='" << cx << "' y1='" << y_of(b.min) << "' x2='" << cx << "' y2='"
        << y_of(b.q25) << "' stroke='black'/>\n";
    svg << "<line x1='" << cx << "' y1='" << y_of(b.q75) << "' x2='" << cx << "' y2='"
        << y_of(b.max) << "' stroke='black'/>\n";
    svg << "<rect x='" << cx - 30 << "' y='" << y_of(b.q75) << "' width='60' height='"
        << y_of(b.q25) - y_of(b.q75) << "' fill='steelblue' fill-opacity='0.5' stroke='black'/>\n";
    svg << "<line x1='" << cx - 30 << "' y1='" << y_of(b.median) << "' x2='" << cx + 30
        << "' y2='" << y_of(b.median) << "' stroke='black' stroke-width='2'/>\n";
    svg << "<text x='" << cx << "' y='340' text-anchor='middle' font-size='11'>" << b.label
        << "</text>\n";
    x += 120.0;
  }
  svg << "</svg>\n";
  return svg.str();
}

/// Polyline traces over tempering levels (values normalized per series).
inline std::string svg_traces(const std::vector<std::pair<std::string, std::vector<double>>>& series,
                              const std::string& title) {
  const double width = 560.0, height = 320.0;
  std::size_t n = 0;
  for (const auto& s : series) n = std::max(n, s.second.size());
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n";
  svg << "<text x='" << width / 2 << "' y='18' text-anchor='middle' font-size='14'>" << title
      << "</text>\n";
  const char* colors[] = {"steelblue", "firebrick", "seagreen", "darkorange"};
  double legend_y = 36.0;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& values = series[s].second;
    if (values.empty()) continue;
    double lo = kInf, hi = -kInf;
    for (double v : values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(hi > lo)) hi = lo + 1.0;
    svg << "<polyline fill='none' stroke='" << colors[s % 4] << "' points='";
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double px = 50.0 + 480.0 * (n > 1 ? static_cast<double>(i) / (static_cast<double>(n) - 1.0) : 0.0);
      const double py = 290.0 - 240.0 * (values[i] - lo) / (hi - lo);
      svg << px << ',' << py << ' ';
    }
    svg << "'/>\n";
    svg << "<text x='55' y='" << legend_y << "' font-size='11' fill='" << colors[s % 4] << "'>"
        << series[s].first << "</text>\n";
    legend_y += 14.0;
  }
  svg << "</svg>\n";
  return svg.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
}

}  // namespace tsmc
