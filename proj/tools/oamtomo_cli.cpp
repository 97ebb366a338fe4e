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

// oamtomo: compressive OAM tomography experiments.
//
// Exit codes: 0 success, 2 spec validation error, 3 data format error,
// 4 non-convergence under --strict, 1 anything else.

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oamtomo/error.hpp"
#include "oamtomo/harness.hpp"
#include "oamtomo/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace oamtomo;

namespace {

constexpr int kExitSpec = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNonConvergence = 4;

struct CommonOptions {
  std::string spec_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::vector<std::string> overrides;
  bool strict = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--spec", o.spec_path, "Experiment spec (JSON)");
  cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Master seed (overrides the spec)");
  cmd->add_option("--threads", o.threads, "OpenMP threads (0 = runtime default)");
  cmd->add_option("--set", o.overrides, "Override a spec field, e.g. --set geometry.z_max=8");
  cmd->add_flag("--strict", o.strict, "Exit with code 4 when any reconstruction fails to converge");
}

harness::ExperimentSpec load_spec(const CommonOptions& o, harness::ExperimentKind kind) {
  json doc = json::object();
  fs::path base;
  if (!o.spec_path.empty()) {
    if (!fs::exists(o.spec_path)) throw SpecError("--spec: file not found: " + o.spec_path);
    try {
      doc = io::read_json_file(o.spec_path);
    } catch (const FormatError& e) {
      throw SpecError(e.what());
    }
    base = fs::path(o.spec_path).parent_path();
  }
  for (const auto& assignment : o.overrides) harness::apply_override(doc, assignment);
  if (o.seed) doc["seed"] = *o.seed;
  return harness::ExperimentSpec::from_json(doc, kind, base);
}

void emit(const fs::path& path, const std::string& text) {
  io::write_text_file(path, text);
  std::cerr << "wrote " << path.string() << '\n';
}

int validate_files(const std::vector<std::string>& files) {
  int status = 0;
  for (const auto& f : files) {
    try {
      const fs::path p(f);
      const std::string ext = p.extension().string();
      if (ext == ".csv") {
        std::ifstream in(p);
        if (!in) throw FormatError("cannot open file");
        const IntensityScan scan = io::read_scan_csv(in);
        std::cout << f << ": ok (scan, " << scan.geometry.pixels_per_side() << "x" << scan.geometry.pixels_per_side()
                  << ", " << scan.geometry.plane_count() << " planes)\n";
      } else if (ext == ".bin" || ext == ".map") {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw FormatError("cannot open file");
        const MeasurementMap map = io::read_map(in);
        std::cout << f << ": ok (map, " << map.matrix().rows() << "x" << map.matrix().cols() << ")\n";
      } else {
        const json doc = io::read_json_file(p);
        if (doc.contains("ells")) {
          const DensityMatrix rho = io::density_from_json(doc);
          std::cout << f << ": ok (density matrix, d=" << rho.dimension() << ")\n";
        } else {
          harness::ExperimentKind kind = harness::ExperimentKind::rank_analysis;
          const std::string k = doc.value("kind", "rank_analysis");
          if (k == "error_sweep") kind = harness::ExperimentKind::error_sweep;
          if (k == "entropy_sweep") kind = harness::ExperimentKind::entropy_sweep;
          if (k == "single_reconstruction" || k == "reconstruct") kind = harness::ExperimentKind::single_reconstruction;
          if (k == "simulate") kind = harness::ExperimentKind::simulate;
          harness::ExperimentSpec::from_json(doc, kind, p.parent_path());
          std::cout << f << ": ok (spec, kind " << k << ")\n";
        }
      }
    } catch (const SpecError& e) {
      std::cout << f << ": invalid spec: " << e.what() << '\n';
      status = std::max(status, kExitSpec);
    } catch (const FormatError& e) {
      std::cout << f << ": " << e.what() << '\n';
      status = std::max(status, kExitFormat);
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oamtomo - compressive tomography of OAM photon states"};
  app.require_subcommand(1);

  CommonOptions opt;
  auto* rank = app.add_subcommand("rank-analysis", "Independent detections n_Z for Z = 1..z_max");
  auto* sweep = app.add_subcommand("error-sweep", "Mean HS error vs rank / Z / dimension, both estimators");
  auto* entropy = app.add_subcommand("entropy-sweep", "Uniqueness entropy vs Z for both estimators");
  auto* recon = app.add_subcommand("reconstruct", "Reconstruct a state from scan CSV files");
  auto* simulate = app.add_subcommand("simulate", "Generate a scan CSV from a state");
  auto* validate = app.add_subcommand("validate", "Check spec, scan, state or map files");
  for (auto* cmd : {rank, sweep, entropy, recon, simulate, validate}) add_common(cmd, opt);
  std::vector<std::string> scan_files;
  recon->add_option("scans", scan_files, "Scan CSV files (override spec.scans)");
  std::vector<std::string> check_files;
  validate->add_option("files", check_files, "Files to check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitSpec;
  }

  if (opt.threads > 0) omp_set_num_threads(opt.threads);
  const fs::path out = opt.out_dir;

  try {
    if (*rank) {
      const auto spec = load_spec(opt, harness::ExperimentKind::rank_analysis);
      const std::string csv = harness::rank_table_csv(harness::run_rank_analysis(spec));
      std::cout << csv;
      emit(out / "rank_analysis.csv", csv);
    } else if (*sweep) {
      const auto spec = load_spec(opt, harness::ExperimentKind::error_sweep);
      const auto result = harness::run_error_sweep(spec);
      emit(out / "error_sweep.csv", harness::sweep_csv(result));
      if (opt.strict && result.nonconverged() > 0) {
        std::cerr << result.nonconverged() << " reconstructions did not converge\n";
        return kExitNonConvergence;
      }
    } else if (*entropy) {
      const auto spec = load_spec(opt, harness::ExperimentKind::entropy_sweep);
      const std::string csv = harness::entropy_csv(harness::run_entropy_sweep(spec));
      std::cout << csv;
      emit(out / "entropy_sweep.csv", csv);
    } else if (*recon) {
      if (!scan_files.empty()) {
        json scans = json::array();
        for (const auto& f : scan_files) scans.push_back(fs::absolute(f).string());
        opt.overrides.push_back("scans=" + scans.dump());
      }
      const auto spec = load_spec(opt, harness::ExperimentKind::single_reconstruction);
      const auto result = harness::run_reconstruct(spec);
      emit(out / "report.json", io::report_to_json(result.report, result.metadata).dump(2) + "\n");
      emit(out / "predicted_scan.csv", harness::scan_csv(result.predicted));
      if (result.metadata.contains("note")) std::cerr << "note: " << result.metadata["note"].get<std::string>() << '\n';
      if (opt.strict && !result.report.converged) {
        std::cerr << "reconstruction did not converge\n";
        return kExitNonConvergence;
      }
    } else if (*simulate) {
      const auto spec = load_spec(opt, harness::ExperimentKind::simulate);
      const auto result = harness::run_simulate(spec);
      emit(out / "scan.csv", harness::scan_csv(result.scan));
      emit(out / "state.json", io::density_to_json(result.state).dump(2) + "\n");
    } else if (*validate) {
      std::vector<std::string> files = check_files;
      if (!opt.spec_path.empty()) files.insert(files.begin(), opt.spec_path);
      if (files.empty()) {
        std::cerr << "validate: nothing to check\n";
        return kExitSpec;
      }
      return validate_files(files);
    }
  } catch (const SpecError& e) {
    std::cerr << "spec error: " << e.what() << '\n';
    return kExitSpec;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
