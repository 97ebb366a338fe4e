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

#include "oamtomo/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "oamtomo/error.hpp"
#include "oamtomo/seeding.hpp"

namespace oamtomo {

namespace {

constexpr int kStallWindow = 10;
constexpr int kKktInterval = 10;

void check_inputs(const MeasurementMap& map, const IntensityScan& scan) {
  if (!(scan.geometry == map.geometry())) {
    throw InvalidArgument("reconstruct: scan geometry does not match the measurement map");
  }
  if (scan.values.size() != map.matrix().rows()) {
    throw InvalidArgument("reconstruct: scan length does not match the measurement map");
  }
}

RVector project_coords(const RVector& x, TraceMode mode) {
  return vectorize(project_psd(matricize(x), mode));
}

void finish(ReconstructionReport& report, const RVector& x) {
  report.raw_estimate = matricize(x);
  if (auto normalized = trace_normalized(report.raw_estimate)) {
    report.estimate = std::move(*normalized);
    report.degenerate_normalization = false;
  } else {
    report.estimate = report.raw_estimate;
    report.degenerate_normalization = true;
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (max_iterations < 1) throw InvalidArgument("SolverConfig: max_iterations must be >= 1");
  if (!(rel_tolerance > 0.0)) throw InvalidArgument("SolverConfig: rel_tolerance must be > 0");
  if (multistart < 1) throw InvalidArgument("SolverConfig: multistart must be >= 1");
}

SolverModel::SolverModel(const MeasurementMap& map, double rank_tolerance)
    : map_(std::make_shared<const MeasurementMap>(map)) {
  const RMatrix& a = map_->matrix();
  if (a.size() == 0) throw InvalidArgument("SolverModel: empty measurement map");
  gram_ = a.transpose() * a;
  Eigen::BDCSVD<RMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const RVector& s = svd.singularValues();
  lipschitz_ = s(0) * s(0);
  const double cut = rank_tolerance * s(0);
  rank_ = static_cast<int>((s.array() > cut).count());
  u_ = svd.matrixU().leftCols(rank_);
  v_ = svd.matrixV().leftCols(rank_);
  inv_sigma_ = s.head(rank_).cwiseInverse();
  null_space_ = svd.matrixV().rightCols(a.cols() - rank_);
}

RVector SolverModel::pseudoinverse_solve(const Eigen::Ref<const RVector>& p) const {
  return v_ * (inv_sigma_.asDiagonal() * (u_.transpose() * p));
}

double objective(const RMatrix& a, const Eigen::Ref<const RVector>& x,
                 const Eigen::Ref<const RVector>& p) {
  return 0.5 * (a * x - p).squaredNorm();
}

RVector objective_gradient(const RMatrix& a, const Eigen::Ref<const RVector>& x,
                           const Eigen::Ref<const RVector>& p) {
  return a.transpose() * (a * x - p);
}

ReconstructionReport reconstruct_positive(const MeasurementMap& map, const IntensityScan& scan,
                                          const SolverConfig& cfg) {
  check_inputs(map, scan);
  return reconstruct_positive(SolverModel(map), scan, cfg);
}

ReconstructionReport reconstruct_positive(const SolverModel& model, const IntensityScan& scan,
                                          const SolverConfig& cfg,
                                          const std::optional<CMatrix>& initial) {
  cfg.validate();
  const MeasurementMap& map = model.map();
  check_inputs(map, scan);
  const RMatrix& a = map.matrix();
  const RMatrix& gram = model.gram();
  const RVector& p = scan.values;
  const Eigen::Index n = a.cols();
  const double lipschitz = model.lipschitz();

  ReconstructionReport report{map.basis(), {}, {}, {}, 0, false, false, std::nullopt};

  if (p.squaredNorm() == 0.0 && cfg.trace_mode == TraceMode::none) {
    // The zero matrix is the exact minimizer.
    const RVector zero = RVector::Zero(n);
    report.objective_history.push_back(0.0);
    report.converged = true;
    finish(report, zero);
    return report;
  }

  const RVector atp = a.transpose() * p;
  auto gradient = [&](const RVector& v) -> RVector { return gram * v - atp; };
  auto residual_norm = [&](const RVector& v) { return (a * v - p).norm(); };
  auto kkt = [&](const RVector& v) {
    const RVector stepped = project_coords(v - gradient(v) / lipschitz, cfg.trace_mode);
    const double scale = std::max({v.norm(), stepped.norm(), std::numeric_limits<double>::min()});
    return (v - stepped).norm() / scale;
  };

  RVector x = initial ? project_coords(vectorize(*initial), cfg.trace_mode)
                      : project_coords(RVector::Zero(n), cfg.trace_mode);
  double res = residual_norm(x);
  double f = 0.5 * res * res;
  report.objective_history.push_back(res);

  if (kkt(x) < cfg.rel_tolerance) {
    report.converged = true;
    finish(report, x);
    return report;
  }

  RVector y = x;
  double momentum = 1.0;
  double step_lipschitz = cfg.step_rule == StepRule::backtracking ? lipschitz * 1e-3 : lipschitz;
  int stall = 0;
  bool just_restarted = false;

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    report.iterations_used = it;
    const RVector g = gradient(y);
    RVector x_next;
    double f_next = 0.0;
    double res_next = 0.0;
    if (cfg.step_rule == StepRule::fixed) {
      x_next = project_coords(y - g / step_lipschitz, cfg.trace_mode);
      res_next = residual_norm(x_next);
      f_next = 0.5 * res_next * res_next;
    } else {
      const double f_y = objective(a, y, p);
      for (;;) {
        x_next = project_coords(y - g / step_lipschitz, cfg.trace_mode);
        res_next = residual_norm(x_next);
        f_next = 0.5 * res_next * res_next;
        const RVector delta = x_next - y;
        const double model_bound = f_y + g.dot(delta) + 0.5 * step_lipschitz * delta.squaredNorm();
        if (f_next <= model_bound * (1.0 + 1e-12) + 1e-300 || step_lipschitz >= lipschitz) break;
        step_lipschitz = std::min(2.0 * step_lipschitz, lipschitz);
      }
    }

    if (f_next > f && !just_restarted && cfg.acceleration) {
      // Momentum overshoot: restart from the last accepted iterate.
      y = x;
      momentum = 1.0;
      just_restarted = true;
      continue;
    }
    just_restarted = false;

    const double decrease = (f - f_next) / std::max(f, std::numeric_limits<double>::min());
    if (cfg.acceleration) {
      const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      y = x_next + ((momentum - 1.0) / next_momentum) * (x_next - x);
      momentum = next_momentum;
    } else {
      y = x_next;
    }
    x = std::move(x_next);
    f = f_next;
    res = res_next;
    report.objective_history.push_back(res);

    stall = decrease < cfg.rel_tolerance ? stall + 1 : 0;
    if (stall >= kStallWindow || (it % kKktInterval == 0 && kkt(x) < cfg.rel_tolerance)) {
      report.converged = true;
      break;
    }
  }

  finish(report, x);
  return report;
}

ReconstructionReport reconstruct_pseudoinverse(const MeasurementMap& map, const IntensityScan& scan) {
  check_inputs(map, scan);
  return reconstruct_pseudoinverse(SolverModel(map), scan);
}

ReconstructionReport reconstruct_pseudoinverse(const SolverModel& model, const IntensityScan& scan) {
  check_inputs(model.map(), scan);
  const RVector x = model.pseudoinverse_solve(scan.values);
  ReconstructionReport report{model.map().basis(), {}, {}, {}, 1, true, false, std::nullopt};
  report.objective_history.push_back((model.map().matrix() * x - scan.values).norm());
  finish(report, x);
  return report;
}

double singular_value_entropy(const RMatrix& columns) {
  if (columns.size() == 0) throw InvalidArgument("singular_value_entropy: empty matrix");
  Eigen::BDCSVD<RMatrix> svd(columns);
  const RVector& s = svd.singularValues();
  const double total = s.sum();
  if (!(total > 0.0)) return 0.0;
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double w = s(i) / total;
    if (w > 0.0) entropy -= w * std::log(w);
  }
  return std::max(entropy, 0.0);
}

double uniqueness_entropy(const MeasurementMap& map, const IntensityScan& scan,
                          const SolverConfig& cfg, EstimatorBranch branch) {
  check_inputs(map, scan);
  return uniqueness_entropy(SolverModel(map), scan, cfg, branch);
}

double uniqueness_entropy(const SolverModel& model, const IntensityScan& scan,
                          const SolverConfig& cfg, EstimatorBranch branch) {
  cfg.validate();
  if (cfg.multistart < 2) throw InvalidArgument("uniqueness_entropy: multistart must be >= 2");
  check_inputs(model.map(), scan);
  const ModeBasis& basis = model.map().basis();
  const Eigen::Index n = model.map().matrix().cols();
  RMatrix columns(n, cfg.multistart);

  if (branch == EstimatorBranch::positive) {
    // Each plane integrates to roughly Tr(rho); use that as the start scale.
    const double trace_guess =
        std::max(scan.values.sum() / scan.geometry.plane_count(), std::numeric_limits<double>::min());
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < cfg.multistart; ++j) {
      const DensityMatrix start =
          random_state(basis, basis.dimension(), derive_seed(cfg.seed, static_cast<std::uint64_t>(j)));
      const CMatrix init = trace_guess * start.matrix();
      const ReconstructionReport r = reconstruct_positive(model, scan, cfg, init);
      columns.col(j) = vectorize(r.estimate);
    }
  } else {
    const RVector base = model.pseudoinverse_solve(scan.values);
    const RMatrix& null = model.null_space();
    const double scale = base.norm() / 10.0;
    std::mt19937_64 gen(derive_seed(cfg.seed, 0x5eedULL));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int j = 0; j < cfg.multistart; ++j) {
      RVector c(null.cols());
      for (Eigen::Index k = 0; k < c.size(); ++k) c(k) = scale * normal(gen);
      columns.col(j) = base + null * c;
    }
  }
  return singular_value_entropy(columns);
}

}  // namespace oamtomo
