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

// State reconstruction from intensity scans.
//
// reconstruct_positive minimizes 1/2 ||A x - p||^2 over the PSD cone by
// projected gradient (optionally accelerated, restarting the momentum when the
// objective goes up). reconstruct_pseudoinverse is the unconstrained
// minimum-norm baseline. Both report a trace-normalized estimate.
//
// A SolverModel caches everything that depends only on the map (Gram matrix,
// Lipschitz constant, SVD, null space); build it once when solving many scans
// against the same map.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "oamtomo/qstate.hpp"
#include "oamtomo/sensor.hpp"

namespace oamtomo {

enum class StepRule { fixed, backtracking };

struct SolverConfig {
  int max_iterations = 20000;
  /// Objective-stagnation and KKT threshold.
  double rel_tolerance = 1e-10;
  StepRule step_rule = StepRule::fixed;
  bool acceleration = true;
  TraceMode trace_mode = TraceMode::none;
  int multistart = 1;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument on out-of-range fields.
  void validate() const;
};

struct ReconstructionReport {
  ModeBasis basis;
  /// Trace-normalized estimate (the raw solution when normalization is
  /// degenerate, see below).
  CMatrix estimate;
  /// Solution before trace normalization.
  CMatrix raw_estimate;
  /// Residual norms ||A x_k - p||, starting with the initial iterate.
  std::vector<double> objective_history;
  int iterations_used = 0;
  bool converged = false;
  /// Raw solution had no positive trace, so `estimate` could not be normalized.
  bool degenerate_normalization = false;
  std::optional<double> uniqueness_entropy;
};

class SolverModel {
 public:
  explicit SolverModel(const MeasurementMap& map, double rank_tolerance = kDefaultRankTolerance);

  const MeasurementMap& map() const noexcept { return *map_; }
  const RMatrix& gram() const noexcept { return gram_; }
  double lipschitz() const noexcept { return lipschitz_; }
  int rank() const noexcept { return rank_; }
  /// Orthonormal basis of null(A) in Hermitian coordinates (columns).
  const RMatrix& null_space() const noexcept { return null_space_; }

  /// A^+ p, the minimum-norm least-squares solution.
  RVector pseudoinverse_solve(const Eigen::Ref<const RVector>& p) const;

 private:
  std::shared_ptr<const MeasurementMap> map_;
  RMatrix gram_;
  double lipschitz_ = 0.0;
  int rank_ = 0;
  RMatrix u_;
  RVector inv_sigma_;
  RMatrix v_;
  RMatrix null_space_;
};

/// 1/2 ||A x - p||^2.
double objective(const RMatrix& a, const Eigen::Ref<const RVector>& x,
                 const Eigen::Ref<const RVector>& p);
/// A^T (A x - p).
RVector objective_gradient(const RMatrix& a, const Eigen::Ref<const RVector>& x,
                           const Eigen::Ref<const RVector>& p);

ReconstructionReport reconstruct_positive(const MeasurementMap& map, const IntensityScan& scan,
                                          const SolverConfig& cfg = {});
/// Variant reusing cached factorizations; `initial` is a Hermitian starting
/// point (projected before use), zero when absent.
ReconstructionReport reconstruct_positive(const SolverModel& model, const IntensityScan& scan,
                                          const SolverConfig& cfg,
                                          const std::optional<CMatrix>& initial = std::nullopt);

ReconstructionReport reconstruct_pseudoinverse(const MeasurementMap& map, const IntensityScan& scan);
ReconstructionReport reconstruct_pseudoinverse(const SolverModel& model, const IntensityScan& scan);

/// S = -sum s_i ln s_i over the normalized singular values of `columns`.
double singular_value_entropy(const RMatrix& columns);

enum class EstimatorBranch { positive, pseudoinverse };

/// Stacks cfg.multistart estimates as columns and returns their singular-value
/// entropy. Positive branch: reconstructions from random projected Ginibre
/// starting points. Pseudoinverse branch: A^+ p plus Gaussian null-space
/// components of scale ||A^+ p|| / 10.
double uniqueness_entropy(const MeasurementMap& map, const IntensityScan& scan,
                          const SolverConfig& cfg, EstimatorBranch branch = EstimatorBranch::positive);
double uniqueness_entropy(const SolverModel& model, const IntensityScan& scan,
                          const SolverConfig& cfg, EstimatorBranch branch = EstimatorBranch::positive);

}  // namespace oamtomo
