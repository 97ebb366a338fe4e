// Copyright 2026 The oamtomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "oamtomo/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "oamtomo/error.hpp"

namespace oamtomo::io {

namespace {

using nlohmann::json;

constexpr const char* kScanHeader = "plane_index,zeta,px,py,value";

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

template <typename T>
T parse_field(std::string_view field, std::size_t line, const char* name) {
  T value{};
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw FormatError(std::string("cannot parse ") + name + " from '" + std::string(field) + "'", line);
  }
  return value;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

json matrix_part(const CMatrix& m, bool imaginary) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(imaginary ? m(i, j).imag() : m(i, j).real());
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

json density_to_json(const std::vector<int>& ells, const CMatrix& m) {
  return json{{"ells", ells}, {"re", matrix_part(m, false)}, {"im", matrix_part(m, true)}};
}

json density_to_json(const DensityMatrix& rho) {
  return density_to_json(rho.basis().ells(), rho.matrix());
}

RawDensity parse_density(const json& doc) {
  if (!doc.is_object()) throw FormatError("density matrix: document must be a JSON object");
  for (const char* key : {"ells", "re", "im"}) {
    if (!doc.contains(key)) throw FormatError(std::string("density matrix: missing field '") + key + "'");
  }
  RawDensity out;
  try {
    out.ells = doc.at("ells").get<std::vector<int>>();
    const auto re = doc.at("re").get<std::vector<std::vector<double>>>();
    const auto im = doc.at("im").get<std::vector<std::vector<double>>>();
    const std::size_t d = out.ells.size();
    if (re.size() != d || im.size() != d) {
      throw FormatError("density matrix: 're'/'im' must have one row per mode");
    }
    out.matrix.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      if (re[i].size() != d || im[i].size() != d) {
        throw FormatError("density matrix: row " + std::to_string(i) + " has the wrong length");
      }
      for (std::size_t j = 0; j < d; ++j) {
        out.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = Complex(re[i][j], im[i][j]);
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("density matrix: ") + e.what());
  }
  return out;
}

DensityMatrix density_from_json(const json& doc, BeamGeometry geometry) {
  RawDensity raw = parse_density(doc);
  ModeBasis basis = [&] {
    try {
      return ModeBasis(raw.ells, geometry);
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("density matrix: ") + e.what());
    }
  }();
  const StateCheck check = check_state(raw.matrix);
  if (!check.ok()) throw FormatError("density matrix: " + check.failures());
  return DensityMatrix(std::move(basis), std::move(raw.matrix));
}

void write_scan_csv(std::ostream& out, const IntensityScan& scan) {
  const ScanGeometry& g = scan.geometry;
  if (scan.values.size() != g.rows()) throw InvalidArgument("write_scan_csv: value count does not match geometry");
  const int n = g.pixels_per_side();
  out << kScanHeader << '\n';
  Eigen::Index row = 0;
  for (int plane = 0; plane < g.plane_count(); ++plane) {
    const std::string zeta = format_double(g.planes()[static_cast<std::size_t>(plane)]);
    for (int py = 0; py < n; ++py) {
      for (int px = 0; px < n; ++px) {
        out << plane << ',' << zeta << ',' << px << ',' << py << ',' << format_double(scan.values(row++)) << '\n';
      }
    }
  }
}

IntensityScan read_scan_csv(std::istream& in, double extent) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (trim(line) != kScanHeader) {
      throw FormatError(std::string("expected header '") + kScanHeader + "'", line_no);
    }
    have_header = true;
    break;
  }
  if (!have_header) throw FormatError("empty scan file");

  struct Row {
    int plane;
    double zeta;
    int px;
    int py;
    double value;
    std::size_t line;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_commas(view);
    if (fields.size() != 5) throw FormatError("expected 5 comma-separated fields", line_no);
    Row r{parse_field<int>(trim(fields[0]), line_no, "plane_index"),
          parse_field<double>(trim(fields[1]), line_no, "zeta"),
          parse_field<int>(trim(fields[2]), line_no, "px"),
          parse_field<int>(trim(fields[3]), line_no, "py"),
          parse_field<double>(trim(fields[4]), line_no, "value"),
          line_no};
    if (!std::isfinite(r.value) || r.value < 0.0) throw FormatError("value must be finite and >= 0", line_no);
    if (!std::isfinite(r.zeta)) throw FormatError("zeta must be finite", line_no);
    rows.push_back(r);
  }
  if (rows.empty()) throw FormatError("scan file has no data rows", line_no);

  std::size_t per_plane = 0;
  while (per_plane < rows.size() && rows[per_plane].plane == rows.front().plane) ++per_plane;
  const auto n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(per_plane))));
  if (static_cast<std::size_t>(n) * static_cast<std::size_t>(n) != per_plane) {
    throw FormatError("plane 0 does not hold a square pixel grid (" + std::to_string(per_plane) + " rows)",
                      rows[per_plane - 1].line);
  }
  if (rows.size() % per_plane != 0) {
    throw FormatError("planes do not all hold " + std::to_string(per_plane) + " pixels", rows.back().line);
  }

  std::vector<double> planes;
  RVector values(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Row& r = rows[k];
    const auto plane = static_cast<int>(k / per_plane);
    const auto pixel = static_cast<int>(k % per_plane);
    if (r.plane != plane) throw FormatError("plane_index out of sequence (expected " + std::to_string(plane) + ")", r.line);
    if (r.px != pixel % n || r.py != pixel / n) {
      throw FormatError("pixel out of order (expected px=" + std::to_string(pixel % n) +
                            ", py=" + std::to_string(pixel / n) + ")",
                        r.line);
    }
    if (pixel == 0) {
      planes.push_back(r.zeta);
    } else if (r.zeta != planes.back()) {
      throw FormatError("zeta changes inside a plane", r.line);
    }
    values(static_cast<Eigen::Index>(k)) = r.value;
  }
  try {
    return IntensityScan{ScanGeometry(n, extent, std::move(planes)), std::move(values), std::nullopt};
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("scan geometry: ") + e.what());
  }
}

void write_map(std::ostream& out, const MeasurementMap& map) {
  const ScanGeometry& g = map.geometry();
  const json header{{"format", "oamtomo-map"},
                    {"rows", map.matrix().rows()},
                    {"cols", map.matrix().cols()},
                    {"dtype", "float64"},
                    {"order", "row-major"},
                    {"ells", map.basis().ells()},
                    {"waist", map.basis().geometry().waist()},
                    {"wave_number", map.basis().geometry().wave_number()},
                    {"pixels_per_side", g.pixels_per_side()},
                    {"extent", g.extent()},
                    {"planes", g.planes()}};
  out << header.dump() << '\n';
  static_assert(std::endian::native == std::endian::little, "map dumps are written little-endian");
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = map.matrix();
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
}

MeasurementMap read_map(std::istream& in) {
  std::string header_line;
  if (!std::getline(in, header_line)) throw FormatError("map file: missing header line", 1);
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw FormatError(std::string("map file: bad header: ") + e.what(), 1);
  }
  try {
    if (header.at("format") != "oamtomo-map" || header.at("dtype") != "float64" || header.at("order") != "row-major") {
      throw FormatError("map file: unsupported format/dtype/order", 1);
    }
    const auto rows = header.at("rows").get<Eigen::Index>();
    const auto cols = header.at("cols").get<Eigen::Index>();
    ModeBasis basis(header.at("ells").get<std::vector<int>>(),
                    BeamGeometry(header.at("waist").get<double>(), header.at("wave_number").get<double>()));
    ScanGeometry geometry(header.at("pixels_per_side").get<int>(), header.at("extent").get<double>(),
                          header.at("planes").get<std::vector<double>>());
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
    in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(rm.size() * sizeof(double))) {
      throw FormatError("map file: truncated payload");
    }
    return MeasurementMap(std::move(basis), std::move(geometry), RMatrix(rm));
  } catch (const json::exception& e) {
    throw FormatError(std::string("map file: ") + e.what(), 1);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("map file: ") + e.what(), 1);
  }
}

json report_to_json(const ReconstructionReport& report, const json& metadata) {
  json doc{{"estimate", density_to_json(report.basis.ells(), report.estimate)},
           {"objective_history", report.objective_history},
           {"iterations_used", report.iterations_used},
           {"converged", report.converged},
           {"uniqueness_entropy", nullptr},
           {"metadata", metadata}};
  if (report.uniqueness_entropy) doc["uniqueness_entropy"] = *report.uniqueness_entropy;
  doc["metadata"]["degenerate_normalization"] = report.degenerate_normalization;
  return doc;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace oamtomo::io
