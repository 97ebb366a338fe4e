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

// Density matrices over a set of OAM modes and their real Hermitian
// coordinates.
//
// Coordinate layout for a d-dimensional basis (d^2 reals):
//   [0, d)      diagonal entries, ascending ell
//   then, for each i < j in row-major order, the pair
//               sqrt(2) Re rho_ij, sqrt(2) Im rho_ij
// which are the coefficients on (E_ij + E_ji)/sqrt(2) and i(E_ij - E_ji)/sqrt(2)
// with the sign fixed so that the map is a Hilbert-Schmidt isometry.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oamtomo/optics.hpp"

namespace oamtomo {

using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kTraceTolerance = 1e-10;

/// Ordered, duplicate-free list of azimuthal indices (p = 0 modes).
class ModeBasis {
 public:
  ModeBasis(std::vector<int> ells, BeamGeometry geometry = BeamGeometry{});

  /// {-ell_max, ..., ell_max}, d = 2 ell_max + 1.
  static ModeBasis symmetric(int ell_max, BeamGeometry geometry = BeamGeometry{});
  /// {0, ..., d-1}.
  static ModeBasis nonnegative(int dimension, BeamGeometry geometry = BeamGeometry{});

  const std::vector<int>& ells() const noexcept { return ells_; }
  const BeamGeometry& geometry() const noexcept { return geometry_; }
  int dimension() const noexcept { return static_cast<int>(ells_.size()); }
  std::optional<int> index_of(int ell) const;

  bool operator==(const ModeBasis&) const = default;

 private:
  std::vector<int> ells_;
  BeamGeometry geometry_;
};

enum class TraceMode { none, unit };

/// Outcome of checking a matrix against the density-matrix invariants.
struct StateCheck {
  bool square = true;
  bool hermitian = true;
  bool psd = true;
  bool unit_trace = true;
  double max_asymmetry = 0.0;
  double min_eigenvalue = 0.0;
  double trace = 0.0;

  bool ok() const noexcept { return square && hermitian && psd && unit_trace; }
  /// Human-readable list of the failed invariants, empty when ok().
  std::string failures() const;
};

StateCheck check_state(const CMatrix& m);

/// Hermitian, PSD, unit-trace matrix tied to a mode basis. Construction
/// validates; use the factories below to obtain one.
class DensityMatrix {
 public:
  /// Throws InvalidArgument naming every violated invariant.
  DensityMatrix(ModeBasis basis, CMatrix entries);

  const ModeBasis& basis() const noexcept { return basis_; }
  const CMatrix& matrix() const noexcept { return entries_; }
  int dimension() const noexcept { return basis_.dimension(); }
  double purity() const;

 private:
  ModeBasis basis_;
  CMatrix entries_;
};

struct HermitianVector {
  ModeBasis basis;
  RVector coords;
};

/// Real isometric coordinates of a Hermitian matrix. Throws when the input
/// deviates from Hermitian by more than 1e-8.
RVector vectorize(const CMatrix& h);
HermitianVector vectorize(const DensityMatrix& rho);
/// Inverse of vectorize; coords.size() must be a perfect square.
CMatrix matricize(const Eigen::Ref<const RVector>& coords);

/// Ginibre rank-r state: G (d x r) with standard complex normal entries,
/// rho = G G^+ / Tr(G G^+).
DensityMatrix random_state(const ModeBasis& basis, int rank, std::uint64_t seed);

/// p|0><0| + (1-p)|Psi><Psi| with |Psi> = cos(theta)|-3> + sin(theta)|3>.
DensityMatrix test_state(double p, double theta, const ModeBasis& basis);

/// Tr[(a-b)^2] on raw matrices.
double hs_error(const CMatrix& a, const CMatrix& b);
/// Tr[(a-b)^2]; bases must agree.
double hs_error(const DensityMatrix& a, const DensityMatrix& b);

/// Euclidean projection of a probability-like vector onto {x >= 0, sum x = total}.
RVector project_simplex(const RVector& v, double total = 1.0);

/// Nearest PSD matrix in Hilbert-Schmidt norm; in unit mode, nearest PSD
/// matrix of unit trace.
CMatrix project_psd(const CMatrix& h, TraceMode mode = TraceMode::none);

/// Scale to unit trace. Returns nullopt when the trace is not safely positive.
std::optional<CMatrix> trace_normalized(const CMatrix& h);

}  // namespace oamtomo
