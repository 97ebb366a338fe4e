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

#include "oamtomo/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "oamtomo/error.hpp"
#include "oamtomo/io.hpp"
#include "oamtomo/seeding.hpp"

namespace oamtomo::harness {

namespace {

using nlohmann::json;

// Domain tags keep seeds for different purposes apart.
constexpr std::uint64_t kStateTag = 0x57a7e;
constexpr std::uint64_t kNoiseTag = 0x9015e;
constexpr std::uint64_t kSolverTag = 0x501e;

std::uint64_t key_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t s = master;
  for (std::uint64_t part : parts) s = derive_seed(s, part);
  return s;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw SpecError(where + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.contains(key)) throw SpecError(where + "." + key + ": unknown field");
  }
}

template <typename T>
T get_field(const json& obj, const std::string& where, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw SpecError(where + "." + key + ": wrong type (" + obj.at(key).dump() + ")");
  }
}

std::pair<double, double> mean_variance(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  if (v.size() > 1) {
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size() - 1);
  }
  return {mean, var};
}

EstimatorBranch parse_branch(const std::string& s, const std::string& where) {
  if (s == "positive") return EstimatorBranch::positive;
  if (s == "pseudoinverse") return EstimatorBranch::pseudoinverse;
  throw SpecError(where + ": unknown estimator '" + s + "' (positive | pseudoinverse)");
}

SolverConfig parse_solver(const json& j, SolverConfig cfg) {
  const std::string w = "solver";
  check_keys(j, w, {"max_iterations", "rel_tolerance", "step_rule", "acceleration", "trace_mode", "multistart"});
  cfg.max_iterations = get_field(j, w, "max_iterations", cfg.max_iterations);
  cfg.rel_tolerance = get_field(j, w, "rel_tolerance", cfg.rel_tolerance);
  cfg.acceleration = get_field(j, w, "acceleration", cfg.acceleration);
  cfg.multistart = get_field(j, w, "multistart", cfg.multistart);
  const auto step = get_field<std::string>(j, w, "step_rule", cfg.step_rule == StepRule::fixed ? "fixed" : "backtracking");
  if (step == "fixed") {
    cfg.step_rule = StepRule::fixed;
  } else if (step == "backtracking") {
    cfg.step_rule = StepRule::backtracking;
  } else {
    throw SpecError("solver.step_rule: expected fixed | backtracking");
  }
  const auto trace = get_field<std::string>(j, w, "trace_mode", cfg.trace_mode == TraceMode::none ? "none" : "unit");
  if (trace == "none") {
    cfg.trace_mode = TraceMode::none;
  } else if (trace == "unit") {
    cfg.trace_mode = TraceMode::unit;
  } else {
    throw SpecError("solver.trace_mode: expected none | unit");
  }
  return cfg;
}

DensityMatrix draw_test_state(const ModeBasis& basis, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double p = unit(gen);
  const double theta = 2.0 * std::numbers::pi * unit(gen);
  return test_state(p, theta, basis);
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec

ModeBasis BasisSpec::make() const { return with_size(size); }

ModeBasis BasisSpec::with_size(int s) const {
  return span == Span::symmetric ? ModeBasis::symmetric(s) : ModeBasis::nonnegative(s);
}

std::string BasisSpec::label() const {
  return span == Span::symmetric ? "symmetric ell_max=" + std::to_string(size)
                                 : "nonnegative d=" + std::to_string(size);
}

const std::vector<double>& GeometrySpec::plane_list() const {
  return planes.empty() ? default_planes() : planes;
}

ScanGeometry GeometrySpec::prefix(int z) const {
  const auto& all = plane_list();
  if (z < 1 || z > static_cast<int>(all.size())) {
    throw SpecError("geometry: Z=" + std::to_string(z) + " exceeds the " + std::to_string(all.size()) +
                    " available planes");
  }
  return ScanGeometry(pixels, extent, std::vector<double>(all.begin(), all.begin() + z));
}

ExperimentSpec ExperimentSpec::from_json(const json& doc, ExperimentKind kind,
                                         const std::filesystem::path& base_dir) {
  check_keys(doc, "spec",
             {"kind", "basis", "dimensions", "geometry", "states", "noise", "solver", "branches", "scans",
              "predict_planes", "seed"});
  ExperimentSpec spec;
  spec.kind = kind;
  if (kind == ExperimentKind::entropy_sweep) {
    spec.solver.multistart = 20;
    spec.states.kind = StateSource::Kind::test_state;
    spec.geometry.z_values = {1, 2, 3, 4};
  }
  if (kind == ExperimentKind::error_sweep) spec.geometry.z_values = {1, 2, 3};

  if (doc.contains("basis")) {
    const json& b = doc.at("basis");
    check_keys(b, "basis", {"span", "ell_max", "dimension"});
    const auto span = get_field<std::string>(b, "basis", "span", "symmetric");
    if (span == "symmetric") {
      spec.basis.span = BasisSpec::Span::symmetric;
      if (b.contains("dimension")) throw SpecError("basis.dimension: use ell_max with the symmetric span");
      spec.basis.size = get_field(b, "basis", "ell_max", 7);
    } else if (span == "nonnegative") {
      spec.basis.span = BasisSpec::Span::nonnegative;
      if (b.contains("ell_max")) throw SpecError("basis.ell_max: use dimension with the nonnegative span");
      spec.basis.size = get_field(b, "basis", "dimension", 5);
    } else {
      throw SpecError("basis.span: expected symmetric | nonnegative");
    }
  }
  spec.dimensions = get_field(doc, "spec", "dimensions", spec.dimensions);

  if (doc.contains("geometry")) {
    const json& g = doc.at("geometry");
    check_keys(g, "geometry", {"pixels", "extent", "planes", "z", "z_max"});
    spec.geometry.pixels = get_field(g, "geometry", "pixels", spec.geometry.pixels);
    spec.geometry.extent = get_field(g, "geometry", "extent", spec.geometry.extent);
    spec.geometry.planes = get_field(g, "geometry", "planes", spec.geometry.planes);
    spec.geometry.z_max = get_field(g, "geometry", "z_max", spec.geometry.z_max);
    if (g.contains("z")) {
      if (g.at("z").is_number_integer()) {
        spec.geometry.z_values = {g.at("z").get<int>()};
      } else {
        spec.geometry.z_values = get_field(g, "geometry", "z", spec.geometry.z_values);
      }
    }
  }

  if (doc.contains("states")) {
    const json& s = doc.at("states");
    check_keys(s, "states", {"source", "ranks", "rank", "trials", "count", "p", "theta", "path"});
    const auto source = get_field<std::string>(s, "states", "source",
                                               spec.states.kind == StateSource::Kind::test_state ? "test_state" : "random");
    if (source == "random") {
      spec.states.kind = StateSource::Kind::random;
    } else if (source == "test_state") {
      spec.states.kind = StateSource::Kind::test_state;
    } else if (source == "file") {
      spec.states.kind = StateSource::Kind::file;
    } else {
      throw SpecError("states.source: expected random | test_state | file");
    }
    spec.states.ranks = get_field(s, "states", "ranks", spec.states.ranks);
    if (s.contains("rank")) spec.states.ranks = {get_field(s, "states", "rank", 1)};
    spec.states.trials = get_field(s, "states", "trials", spec.states.trials);
    spec.states.count = get_field(s, "states", "count", spec.states.count);
    if (s.contains("p")) spec.states.p = get_field(s, "states", "p", 0.0);
    if (s.contains("theta")) spec.states.theta = get_field(s, "states", "theta", 0.0);
    if (s.contains("path")) {
      std::filesystem::path p = get_field<std::string>(s, "states", "path", "");
      spec.states.path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
  }

  if (doc.contains("noise")) {
    const json& n = doc.at("noise");
    check_keys(n, "noise", {"model", "total"});
    const auto model = get_field<std::string>(n, "noise", "model", "none");
    if (model == "none") {
      spec.noise = NoiseModel::none();
    } else if (model == "poisson") {
      const double total = get_field(n, "noise", "total", 0.0);
      if (!(total > 0.0)) throw SpecError("noise.total: must be > 0 for the poisson model");
      spec.noise = NoiseModel::poisson(total);
    } else {
      throw SpecError("noise.model: expected none | poisson");
    }
  }

  if (doc.contains("solver")) spec.solver = parse_solver(doc.at("solver"), spec.solver);

  if (doc.contains("branches")) {
    spec.branches.clear();
    for (const auto& s : get_field<std::vector<std::string>>(doc, "spec", "branches", {})) {
      spec.branches.push_back(parse_branch(s, "branches"));
    }
  }
  for (const auto& s : get_field<std::vector<std::string>>(doc, "spec", "scans", {})) {
    std::filesystem::path p = s;
    spec.scans.push_back(p.is_relative() && !base_dir.empty() ? base_dir / p : p);
  }
  spec.predict_planes = get_field(doc, "spec", "predict_planes", spec.predict_planes);
  spec.seed = get_field<std::uint64_t>(doc, "spec", "seed", spec.seed);

  spec.validate();
  return spec;
}

void ExperimentSpec::validate() const {
  if (basis.span == BasisSpec::Span::symmetric && basis.size < 0) throw SpecError("basis.ell_max: must be >= 0");
  if (basis.span == BasisSpec::Span::nonnegative && basis.size < 1) throw SpecError("basis.dimension: must be >= 1");
  for (int s : dimensions) {
    if (s < (basis.span == BasisSpec::Span::symmetric ? 0 : 1)) throw SpecError("dimensions: invalid basis size");
  }
  if (geometry.pixels < 1) throw SpecError("geometry.pixels: must be >= 1");
  if (!(geometry.extent > 0.0)) throw SpecError("geometry.extent: must be > 0");
  const auto& planes = geometry.plane_list();
  if (std::set<double>(planes.begin(), planes.end()).size() != planes.size()) {
    throw SpecError("geometry.planes: positions must be distinct");
  }
  const auto nplanes = static_cast<int>(planes.size());
  if (kind == ExperimentKind::rank_analysis && (geometry.z_max < 1 || geometry.z_max > nplanes)) {
    throw SpecError("geometry.z_max: must lie in [1, " + std::to_string(nplanes) + "]");
  }
  if (kind != ExperimentKind::rank_analysis && kind != ExperimentKind::single_reconstruction) {
    if (geometry.z_values.empty()) throw SpecError("geometry.z: at least one plane count is required");
    for (int z : geometry.z_values) {
      if (z < 1 || z > nplanes) throw SpecError("geometry.z: each value must lie in [1, " + std::to_string(nplanes) + "]");
    }
  }
  try {
    solver.validate();
  } catch (const InvalidArgument& e) {
    throw SpecError(std::string("solver: ") + e.what());
  }

  auto sizes = dimensions.empty() ? std::vector<int>{basis.size} : dimensions;
  if (kind == ExperimentKind::error_sweep) {
    if (states.kind != StateSource::Kind::random) throw SpecError("states.source: error sweeps need random states");
    if (states.trials < 1) throw SpecError("states.trials: must be >= 1");
    if (states.ranks.empty()) throw SpecError("states.ranks: at least one rank is required");
    for (int s : sizes) {
      const int d = basis.with_size(s).dimension();
      for (int r : states.ranks) {
        if (r < 1 || r > d) {
          throw SpecError("states.ranks: rank " + std::to_string(r) + " outside [1, " + std::to_string(d) + "]");
        }
      }
    }
  }
  if (kind == ExperimentKind::entropy_sweep) {
    if (solver.multistart < 2) throw SpecError("solver.multistart: entropy needs at least 2 starts");
    if (states.count < 1) throw SpecError("states.count: must be >= 1");
    if (states.kind == StateSource::Kind::file) throw SpecError("states.source: entropy sweeps draw their own states");
    if (states.kind == StateSource::Kind::random && states.ranks.empty()) throw SpecError("states.ranks: need a rank");
  }
  if (kind == ExperimentKind::entropy_sweep || kind == ExperimentKind::simulate) {
    const ModeBasis b = basis.make();
    if (states.kind == StateSource::Kind::test_state) {
      if (!b.index_of(-3) || !b.index_of(0) || !b.index_of(3)) {
        throw SpecError("states.source: test_state needs a basis containing ell = -3, 0, 3");
      }
      if (states.p && !(*states.p >= 0.0 && *states.p <= 1.0)) throw SpecError("states.p: must lie in [0, 1]");
    }
    if (states.kind == StateSource::Kind::random) {
      if (states.ranks.empty()) throw SpecError("states.ranks: need a rank");
      if (states.ranks.front() < 1 || states.ranks.front() > b.dimension()) throw SpecError("states.ranks: rank outside [1, d]");
    }
  }
  if (states.kind == StateSource::Kind::file && kind == ExperimentKind::simulate) {
    if (states.path.empty()) throw SpecError("states.path: required for source=file");
    if (!std::filesystem::exists(states.path)) throw SpecError("states.path: file not found: " + states.path.string());
  }
  if (kind == ExperimentKind::single_reconstruction) {
    if (scans.empty()) throw SpecError("scans: at least one scan file is required");
    for (const auto& p : scans) {
      if (!std::filesystem::exists(p)) throw SpecError("scans: file not found: " + p.string());
    }
    if (branches.empty()) throw SpecError("branches: need an estimator");
    if (predict_planes.empty()) throw SpecError("predict_planes: need at least one plane");
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw SpecError("--set expects key=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw SpecError("--set: empty path component in '" + path + "'");
    if (!node->is_object()) throw SpecError("--set: '" + path + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

// ---------------------------------------------------------------------------
// Rank analysis

std::vector<RankRow> run_rank_analysis(const ExperimentSpec& spec) {
  const ModeBasis basis = spec.basis.make();
  std::vector<RankRow> rows(static_cast<std::size_t>(spec.geometry.z_max));
#pragma omp parallel for schedule(dynamic)
  for (int z = 1; z <= spec.geometry.z_max; ++z) {
    const MeasurementMap map = build_measurement_map(basis, spec.geometry.prefix(z), Execution::serial);
    rows[static_cast<std::size_t>(z - 1)] = RankRow{z, independent_detections(map)};
  }
  return rows;
}

std::string rank_table_csv(const std::vector<RankRow>& rows) {
  std::ostringstream out;
  out << "Z,n_Z\n";
  for (const auto& r : rows) out << r.z << ',' << r.n_z << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Error sweep

int SweepResult::nonconverged() const {
  int total = 0;
  for (const auto& c : cells) total += c.nonconverged;
  return total;
}

SweepResult run_error_sweep(const ExperimentSpec& spec) {
  const std::vector<int> sizes = spec.dimensions.empty() ? std::vector<int>{spec.basis.size} : spec.dimensions;

  struct ModelKey {
    int size;
    int z;
  };
  std::vector<ModelKey> keys;
  for (int s : sizes) {
    for (int z : spec.geometry.z_values) keys.push_back({s, z});
  }
  std::vector<std::optional<SolverModel>> models(keys.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const MeasurementMap map =
        build_measurement_map(spec.basis.with_size(keys[k].size), spec.geometry.prefix(keys[k].z), Execution::serial);
    models[k].emplace(map);
  }

  struct Task {
    std::size_t model;
    std::size_t cell;
    int rank;
    int trial;
  };
  SweepResult result;
  std::vector<Task> tasks;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    for (int rank : spec.states.ranks) {
      SweepCell cell;
      cell.basis_size = keys[k].size;
      cell.dimension = spec.basis.with_size(keys[k].size).dimension();
      cell.z = keys[k].z;
      cell.rank = rank;
      cell.trials = spec.states.trials;
      result.cells.push_back(cell);
      for (int t = 0; t < spec.states.trials; ++t) tasks.push_back({k, result.cells.size() - 1, rank, t});
    }
  }

  struct Outcome {
    double positive = 0.0;
    double pinv = 0.0;
    double pinv_raw = 0.0;
    bool converged = true;
  };
  std::vector<Outcome> outcomes(tasks.size());
  const bool want_positive =
      std::find(spec.branches.begin(), spec.branches.end(), EstimatorBranch::positive) != spec.branches.end();
  const bool want_pinv =
      std::find(spec.branches.begin(), spec.branches.end(), EstimatorBranch::pseudoinverse) != spec.branches.end();

#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& task = tasks[i];
    const SolverModel& model = *models[task.model];
    const auto size = static_cast<std::uint64_t>(keys[task.model].size);
    const auto z = static_cast<std::uint64_t>(keys[task.model].z);
    const auto rank = static_cast<std::uint64_t>(task.rank);
    const auto trial = static_cast<std::uint64_t>(task.trial);
    // The same true states are reused across Z so columns of the sweep are
    // comparable.
    const DensityMatrix truth =
        random_state(model.map().basis(), task.rank, key_seed(spec.seed, {kStateTag, size, rank, trial}));
    const IntensityScan scan =
        simulate_scan(truth, model.map(), spec.noise, key_seed(spec.seed, {kNoiseTag, size, z, rank, trial}));
    Outcome out;
    if (want_positive) {
      SolverConfig cfg = spec.solver;
      cfg.seed = key_seed(spec.seed, {kSolverTag, size, z, rank, trial});
      const ReconstructionReport rep = reconstruct_positive(model, scan, cfg);
      out.positive = hs_error(rep.estimate, truth.matrix());
      out.converged = rep.converged;
    }
    if (want_pinv) {
      const ReconstructionReport rep = reconstruct_pseudoinverse(model, scan);
      out.pinv = hs_error(rep.estimate, truth.matrix());
      out.pinv_raw = hs_error(rep.raw_estimate, truth.matrix());
    }
    outcomes[i] = out;
  }

  std::vector<std::vector<double>> pos(result.cells.size()), pinv(result.cells.size()), raw(result.cells.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Outcome& o = outcomes[i];
    if (!std::isfinite(o.positive) || !std::isfinite(o.pinv) || !std::isfinite(o.pinv_raw)) {
      throw std::runtime_error("error sweep produced a non-finite error value");
    }
    const std::size_t c = tasks[i].cell;
    pos[c].push_back(o.positive);
    pinv[c].push_back(o.pinv);
    raw[c].push_back(o.pinv_raw);
    if (!o.converged) ++result.cells[c].nonconverged;
  }
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    SweepCell& cell = result.cells[c];
    std::tie(cell.mean_positive, cell.var_positive) = mean_variance(pos[c]);
    std::tie(cell.mean_pinv, cell.var_pinv) = mean_variance(pinv[c]);
    std::tie(cell.mean_pinv_raw, cell.var_pinv_raw) = mean_variance(raw[c]);
  }
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "basis_size,d,Z,rank,trials,mean_positive,var_positive,mean_pinv,var_pinv,mean_pinv_raw,var_pinv_raw,"
         "nonconverged\n";
  for (const auto& c : result.cells) {
    out << c.basis_size << ',' << c.dimension << ',' << c.z << ',' << c.rank << ',' << c.trials << ','
        << fmt(c.mean_positive) << ',' << fmt(c.var_positive) << ',' << fmt(c.mean_pinv) << ',' << fmt(c.var_pinv)
        << ',' << fmt(c.mean_pinv_raw) << ',' << fmt(c.var_pinv_raw) << ',' << c.nonconverged << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Entropy sweep

const char* branch_name(EstimatorBranch b) {
  return b == EstimatorBranch::positive ? "positive" : "pseudoinverse";
}

std::vector<EntropyRow> run_entropy_sweep(const ExperimentSpec& spec) {
  const ModeBasis basis = spec.basis.make();
  const auto& zs = spec.geometry.z_values;
  std::vector<std::optional<SolverModel>> models(zs.size());
  for (std::size_t k = 0; k < zs.size(); ++k) {
    models[k].emplace(build_measurement_map(basis, spec.geometry.prefix(zs[k])));
  }

  std::vector<DensityMatrix> states;
  for (int s = 0; s < spec.states.count; ++s) {
    const std::uint64_t seed = key_seed(spec.seed, {kStateTag, static_cast<std::uint64_t>(s)});
    states.push_back(spec.states.kind == StateSource::Kind::test_state
                         ? draw_test_state(basis, seed)
                         : random_state(basis, spec.states.ranks.front(), seed));
  }

  const std::size_t nb = spec.branches.size();
  const std::size_t ns = states.size();
  const std::size_t total = zs.size() * nb * ns;
  std::vector<double> values(total);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t k = i / (nb * ns);
    const std::size_t b = (i / ns) % nb;
    const std::size_t s = i % ns;
    const SolverModel& model = *models[k];
    const auto z = static_cast<std::uint64_t>(zs[k]);
    const IntensityScan scan = simulate_scan(states[s], model.map(), spec.noise,
                                             key_seed(spec.seed, {kNoiseTag, z, static_cast<std::uint64_t>(s)}));
    SolverConfig cfg = spec.solver;
    cfg.seed = key_seed(spec.seed, {kSolverTag, z, static_cast<std::uint64_t>(s)});
    values[i] = uniqueness_entropy(model, scan, cfg, spec.branches[b]);
  }

  std::vector<EntropyRow> rows;
  for (std::size_t k = 0; k < zs.size(); ++k) {
    for (std::size_t b = 0; b < nb; ++b) {
      const auto first = values.begin() + static_cast<std::ptrdiff_t>((k * nb + b) * ns);
      const std::vector<double> cell(first, first + static_cast<std::ptrdiff_t>(ns));
      for (double v : cell) {
        if (!std::isfinite(v)) throw std::runtime_error("entropy sweep produced a non-finite value");
      }
      const auto [mean, var] = mean_variance(cell);
      rows.push_back(EntropyRow{zs[k], spec.branches[b], static_cast<int>(ns), mean, var});
    }
  }
  return rows;
}

std::string entropy_csv(const std::vector<EntropyRow>& rows) {
  std::ostringstream out;
  out << "Z,branch,states,mean_S,var_S\n";
  for (const auto& r : rows) {
    out << r.z << ',' << branch_name(r.branch) << ',' << r.states << ',' << fmt(r.mean) << ',' << fmt(r.variance)
        << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Reconstruction and simulation

std::string scan_csv(const IntensityScan& scan) {
  std::ostringstream out;
  io::write_scan_csv(out, scan);
  return out.str();
}

ReconstructionOutput run_reconstruct(const ExperimentSpec& spec) {
  std::vector<double> planes;
  RVector values;
  int pixels = 0;
  for (const auto& path : spec.scans) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    IntensityScan part = [&] {
      try {
        return io::read_scan_csv(in, spec.geometry.extent);
      } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
      }
    }();
    if (pixels != 0 && part.geometry.pixels_per_side() != pixels) {
      throw FormatError(path.string() + ": pixel grid differs from the previous scan file");
    }
    pixels = part.geometry.pixels_per_side();
    planes.insert(planes.end(), part.geometry.planes().begin(), part.geometry.planes().end());
    RVector merged(values.size() + part.values.size());
    merged << values, part.values;
    values = std::move(merged);
  }
  if (pixels != spec.geometry.pixels) {
    throw FormatError("scan grid is " + std::to_string(pixels) + "x" + std::to_string(pixels) +
                      " but the spec expects " + std::to_string(spec.geometry.pixels));
  }
  ScanGeometry geometry = [&] {
    try {
      return ScanGeometry(pixels, spec.geometry.extent, planes);
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("scan geometry: ") + e.what());
    }
  }();
  IntensityScan scan{geometry, std::move(values), std::nullopt};

  const ModeBasis basis = spec.basis.make();
  const MeasurementMap map = build_measurement_map(basis, geometry);
  const SolverModel model(map);
  const EstimatorBranch branch = spec.branches.front();

  ReconstructionOutput out{branch == EstimatorBranch::positive ? reconstruct_positive(model, scan, spec.solver)
                                                               : reconstruct_pseudoinverse(model, scan),
                           json::object(), IntensityScan{geometry, {}, std::nullopt}};
  if (spec.solver.multistart >= 2) out.report.uniqueness_entropy = uniqueness_entropy(model, scan, spec.solver, branch);

  const int d = basis.dimension();
  const bool complete = model.rank() == d * d;
  out.metadata = json{{"estimator", branch_name(branch)},
                      {"basis", basis.ells()},
                      {"planes", geometry.planes()},
                      {"independent_detections", model.rank()},
                      {"d_squared", d * d},
                      {"informationally_complete", complete},
                      {"raw_trace", out.report.raw_estimate.trace().real()}};
  if (!complete) {
    out.metadata["note"] = "informationally incomplete: " + std::to_string(model.rank()) + " independent detections < d^2 = " +
                           std::to_string(d * d);
  }

  const ScanGeometry predict_geometry(pixels, spec.geometry.extent, spec.predict_planes);
  const MeasurementMap predict_map = build_measurement_map(basis, predict_geometry);
  RVector predicted = predict_map.apply(out.report.estimate);
  if (out.report.degenerate_normalization) predicted.setZero();
  out.predicted = IntensityScan{predict_geometry, predicted.cwiseMax(0.0), std::nullopt};
  return out;
}

SimulationOutput run_simulate(const ExperimentSpec& spec) {
  const ModeBasis basis = spec.basis.make();
  const std::uint64_t seed = key_seed(spec.seed, {kStateTag});
  std::optional<DensityMatrix> state;
  switch (spec.states.kind) {
    case StateSource::Kind::random:
      state.emplace(random_state(basis, spec.states.ranks.front(), seed));
      break;
    case StateSource::Kind::test_state: {
      if (spec.states.p && spec.states.theta) {
        state.emplace(test_state(*spec.states.p, *spec.states.theta, basis));
      } else {
        state.emplace(draw_test_state(basis, seed));
      }
      break;
    }
    case StateSource::Kind::file: {
      DensityMatrix loaded = io::density_from_json(io::read_json_file(spec.states.path));
      if (!(loaded.basis() == basis)) {
        throw FormatError(spec.states.path.string() + ": state modes do not match the spec basis (" +
                          spec.basis.label() + ")");
      }
      state.emplace(std::move(loaded));
      break;
    }
  }
  const ScanGeometry geometry = spec.geometry.prefix(spec.geometry.z_values.front());
  const MeasurementMap map = build_measurement_map(basis, geometry);
  IntensityScan scan = simulate_scan(*state, map, spec.noise, key_seed(spec.seed, {kNoiseTag}));
  return SimulationOutput{std::move(*state), std::move(scan)};
}

}  // namespace oamtomo::harness
