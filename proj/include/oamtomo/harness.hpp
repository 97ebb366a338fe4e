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

// Experiment harness behind the command-line tool.
//
// An ExperimentSpec is read from JSON (schema in README.md). Every run is a
// pure function of the spec: trials draw their seeds from derive_seed(master,
// ...) keyed by what the trial is, not by when it runs, so the emitted CSV is
// byte-identical for any thread count.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oamtomo/qstate.hpp"
#include "oamtomo/sensor.hpp"
#include "oamtomo/solver.hpp"

namespace oamtomo::harness {

enum class ExperimentKind { rank_analysis, error_sweep, entropy_sweep, single_reconstruction, simulate };

struct BasisSpec {
  enum class Span { symmetric, nonnegative };
  Span span = Span::symmetric;
  /// ell_max for the symmetric span, d for the nonnegative span.
  int size = 7;

  ModeBasis make() const;
  ModeBasis with_size(int size) const;
  std::string label() const;
};

struct GeometrySpec {
  int pixels = kDefaultPixels;
  double extent = kDefaultExtent;
  /// Explicit plane list; empty means the default list.
  std::vector<double> planes;
  /// Plane counts Z to evaluate (prefixes of the plane list).
  std::vector<int> z_values{2};
  /// Largest Z for rank analysis.
  int z_max = 10;

  const std::vector<double>& plane_list() const;
  ScanGeometry prefix(int z) const;
};

struct StateSource {
  enum class Kind { random, test_state, file };
  Kind kind = Kind::random;
  std::vector<int> ranks{1};
  int trials = 50;
  /// Number of states for the entropy sweep.
  int count = 20;
  /// Fixed test-state parameters for simulate; random when absent.
  std::optional<double> p;
  std::optional<double> theta;
  std::filesystem::path path;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::rank_analysis;
  BasisSpec basis;
  /// Error sweep over dimensions: list of basis sizes; empty sweeps rank x Z.
  std::vector<int> dimensions;
  GeometrySpec geometry;
  StateSource states;
  NoiseModel noise;
  SolverConfig solver;
  std::vector<EstimatorBranch> branches{EstimatorBranch::positive, EstimatorBranch::pseudoinverse};
  std::vector<std::filesystem::path> scans;
  std::vector<double> predict_planes{0.0, 1.0 / 3.0, 0.5, 1.0};
  std::uint64_t seed = 0;

  /// Parses and validates. Unknown keys and bad values raise SpecError naming
  /// the field. Relative file paths resolve against `base_dir`.
  static ExperimentSpec from_json(const nlohmann::json& doc, ExperimentKind kind,
                                  const std::filesystem::path& base_dir = {});
  void validate() const;
};

/// Applies a dotted-path override such as "geometry.z_max=8". The value is
/// parsed as JSON when possible, otherwise taken as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

struct RankRow {
  int z;
  int n_z;
};
std::vector<RankRow> run_rank_analysis(const ExperimentSpec& spec);
std::string rank_table_csv(const std::vector<RankRow>& rows);

struct SweepCell {
  int basis_size = 0;
  int dimension = 0;
  int z = 0;
  int rank = 0;
  int trials = 0;
  double mean_positive = 0.0;
  double var_positive = 0.0;
  double mean_pinv = 0.0;
  double var_pinv = 0.0;
  double mean_pinv_raw = 0.0;
  double var_pinv_raw = 0.0;
  int nonconverged = 0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  int nonconverged() const;
};
SweepResult run_error_sweep(const ExperimentSpec& spec);
std::string sweep_csv(const SweepResult& result);

struct EntropyRow {
  int z;
  EstimatorBranch branch;
  int states;
  double mean;
  double variance;
};
std::vector<EntropyRow> run_entropy_sweep(const ExperimentSpec& spec);
std::string entropy_csv(const std::vector<EntropyRow>& rows);

struct ReconstructionOutput {
  ReconstructionReport report;
  nlohmann::json metadata;
  IntensityScan predicted;
};
/// Reads spec.scans, reconstructs, and predicts scans at spec.predict_planes.
ReconstructionOutput run_reconstruct(const ExperimentSpec& spec);

struct SimulationOutput {
  DensityMatrix state;
  IntensityScan scan;
};
SimulationOutput run_simulate(const ExperimentSpec& spec);

std::string scan_csv(const IntensityScan& scan);
const char* branch_name(EstimatorBranch b);

}  // namespace oamtomo::harness
