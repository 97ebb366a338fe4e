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

// File formats.
//
//   density matrix   JSON {"ells": [...], "re": [[...]], "im": [[...]]},
//                    full row-major matrices
//   intensity scan   CSV, header "plane_index,zeta,px,py,value", one row per
//                    pixel per plane, planes in order, py-major inside a plane
//   measurement map  one JSON header line, then rows*cols little-endian
//                    float64 in row-major order
//   report           JSON {"estimate", "objective_history", "iterations_used",
//                    "converged", "uniqueness_entropy", "metadata"}
//
// Readers throw FormatError; line numbers are reported for CSV input.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "oamtomo/qstate.hpp"
#include "oamtomo/sensor.hpp"
#include "oamtomo/solver.hpp"

namespace oamtomo::io {

nlohmann::json density_to_json(const std::vector<int>& ells, const CMatrix& m);
nlohmann::json density_to_json(const DensityMatrix& rho);

/// Parsed but unvalidated density-matrix document.
struct RawDensity {
  std::vector<int> ells;
  CMatrix matrix;
};
RawDensity parse_density(const nlohmann::json& doc);
/// Parses and validates; the error names every failed invariant.
DensityMatrix density_from_json(const nlohmann::json& doc, BeamGeometry geometry = BeamGeometry{});

void write_scan_csv(std::ostream& out, const IntensityScan& scan);
/// Reads a scan; the grid extent is not stored in the file and is supplied by
/// the caller. Pixel count and planes are recovered from the rows.
IntensityScan read_scan_csv(std::istream& in, double extent = kDefaultExtent);

void write_map(std::ostream& out, const MeasurementMap& map);
MeasurementMap read_map(std::istream& in);

nlohmann::json report_to_json(const ReconstructionReport& report,
                              const nlohmann::json& metadata = nlohmann::json::object());

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace oamtomo::io
