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

#include <doctest.h>

#include <sstream>
#include <string>

#include "oamtomo/error.hpp"
#include "oamtomo/io.hpp"

using namespace oamtomo;
using nlohmann::json;

namespace {

std::size_t format_error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    io::read_scan_csv(in);
  } catch (const FormatError& e) {
    return e.line();
  }
  return static_cast<std::size_t>(-1);
}

std::string tiny_scan_text() {
  const ScanGeometry g(2, 1.0, {0.0, 0.5});
  RVector v(8);
  v << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8;
  std::ostringstream out;
  io::write_scan_csv(out, IntensityScan{g, v, std::nullopt});
  return out.str();
}

}  // namespace

TEST_CASE("density matrix json round trip") {
  const ModeBasis b = ModeBasis::symmetric(2);
  const DensityMatrix rho = random_state(b, 3, 4);
  const json doc = io::density_to_json(rho);
  CHECK(doc.at("ells") == json::array({-2, -1, 0, 1, 2}));
  const DensityMatrix back = io::density_from_json(json::parse(doc.dump()));
  CHECK(back.basis() == b);
  CHECK((back.matrix() - rho.matrix()).norm() == 0.0);
}

TEST_CASE("density matrix json errors") {
  CHECK_THROWS_AS(io::density_from_json(json::array()), FormatError);
  CHECK_THROWS_WITH_AS(io::density_from_json(json{{"ells", {0}}, {"re", {{1.0}}}}), doctest::Contains("'im'"),
                       FormatError);
  CHECK_THROWS_AS(io::density_from_json(json{{"ells", {0, 1}}, {"re", {{1.0, 0.0}}}, {"im", {{0.0, 0.0}}}}),
                  FormatError);
  // Non-Hermitian, negative and off-trace inputs all report their failures.
  const json bad{{"ells", {0, 1}}, {"re", {{1.5, 0.0}, {0.0, -0.5}}}, {"im", {{0.0, 0.2}, {0.0, 0.0}}}};
  try {
    io::density_from_json(bad);
    FAIL("expected a FormatError");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("Hermitian") != std::string::npos);
  }
  const json raw{{"ells", {0, 1}}, {"re", {{0.5, 0.0}, {0.0, 0.5}}}, {"im", {{0.0, 0.0}, {0.0, 0.0}}}};
  CHECK(io::parse_density(raw).matrix.rows() == 2);
}

TEST_CASE("scan csv round trip is exact") {
  const ModeBasis b = ModeBasis::symmetric(2);
  const MeasurementMap map = build_measurement_map(b, ScanGeometry::with_default_planes(3));
  const IntensityScan scan = simulate_scan(random_state(b, 2, 9), map);
  std::ostringstream out;
  io::write_scan_csv(out, scan);
  std::istringstream in(out.str());
  const IntensityScan back = io::read_scan_csv(in);
  CHECK(back.geometry == scan.geometry);
  CHECK(back.values == scan.values);
  CHECK(out.str().rfind("plane_index,zeta,px,py,value\n", 0) == 0);
}

TEST_CASE("scan csv errors carry line numbers") {
  std::istringstream empty("");
  CHECK_THROWS_WITH_AS(io::read_scan_csv(empty), "empty scan file", FormatError);
  std::istringstream header_only("plane_index,zeta,px,py,value\n");
  CHECK_THROWS_AS(io::read_scan_csv(header_only), FormatError);

  const std::string good = tiny_scan_text();
  std::istringstream ok(good);
  CHECK(io::read_scan_csv(ok, 1.0).values.size() == 8);

  auto replace_line = [&](int line, const std::string& text) {
    std::istringstream in(good);
    std::ostringstream out;
    std::string l;
    for (int i = 1; std::getline(in, l); ++i) out << (i == line ? text : l) << '\n';
    return out.str();
  };
  CHECK(format_error_line(replace_line(1, "a,b,c")) == 1);
  CHECK(format_error_line(replace_line(3, "0,0,1,0")) == 3);
  CHECK(format_error_line(replace_line(4, "0,0,0,1,abc")) == 4);
  CHECK(format_error_line(replace_line(5, "0,0,1,1,-2")) == 5);
  CHECK(format_error_line(replace_line(2, "0,0,1,0,0.1")) == 2);
  CHECK(format_error_line(replace_line(7, "1,0.7,0,1,0.1")) == 7);
}

TEST_CASE("measurement map binary round trip") {
  const ModeBasis b = ModeBasis::nonnegative(3, BeamGeometry(1.2, 2.2));
  const MeasurementMap map = build_measurement_map(b, ScanGeometry(9, 2.0, {0.0, 0.4}));
  std::stringstream buf;
  io::write_map(buf, map);
  const MeasurementMap back = io::read_map(buf);
  CHECK(back.basis() == map.basis());
  CHECK(back.geometry() == map.geometry());
  CHECK(back.matrix() == map.matrix());

  std::string bytes;
  {
    std::stringstream again;
    io::write_map(again, map);
    bytes = again.str();
  }
  std::stringstream truncated(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(io::read_map(truncated), FormatError);
  std::stringstream garbage("not json\n");
  CHECK_THROWS_AS(io::read_map(garbage), FormatError);
}

TEST_CASE("report json layout") {
  ReconstructionReport r{ModeBasis::nonnegative(2), CMatrix::Identity(2, 2) * 0.5, CMatrix::Identity(2, 2),
                         {1.0, 0.5}, 7, true, false, std::nullopt};
  json doc = io::report_to_json(r, json{{"estimator", "positive"}});
  CHECK(doc.at("iterations_used") == 7);
  CHECK(doc.at("converged") == true);
  CHECK(doc.at("uniqueness_entropy").is_null());
  CHECK(doc.at("objective_history") == json::array({1.0, 0.5}));
  CHECK(doc.at("metadata").at("estimator") == "positive");
  CHECK(doc.at("metadata").at("degenerate_normalization") == false);
  CHECK(io::density_from_json(doc.at("estimate")).purity() == doctest::Approx(0.5));
  r.uniqueness_entropy = 0.25;
  CHECK(io::report_to_json(r).at("uniqueness_entropy") == 0.25);
}
