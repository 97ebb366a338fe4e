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

// Intensity-scan measurement model.
//
// Pixels live in normalized transverse coordinates (x, y) / w(z), so one grid
// serves every plane. Planes are given as zeta = z / z_R. A scan stacks planes
// in order; inside a plane the pixel (px, py) sits at index py * n + px.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "oamtomo/qstate.hpp"

namespace oamtomo {

/// zeta in {0, 1/3, 1/2, 1, 3/2, 2, 5/2, 3, 4, 5}; a scan with Z planes uses
/// the first Z.
const std::vector<double>& default_planes();

inline constexpr int kDefaultPixels = 19;
inline constexpr double kDefaultExtent = 3.0;
inline constexpr double kDefaultRankTolerance = 1e-8;

class ScanGeometry {
 public:
  ScanGeometry(int pixels_per_side, double extent, std::vector<double> planes);

  /// Default 19x19 grid of half-width 3 with the first `planes` default planes.
  static ScanGeometry with_default_planes(int planes, int pixels_per_side = kDefaultPixels,
                                          double extent = kDefaultExtent);

  int pixels_per_side() const noexcept { return pixels_; }
  double extent() const noexcept { return extent_; }
  const std::vector<double>& planes() const noexcept { return planes_; }
  int plane_count() const noexcept { return static_cast<int>(planes_.size()); }
  int pixels_per_plane() const noexcept { return pixels_ * pixels_; }
  Eigen::Index rows() const noexcept {
    return static_cast<Eigen::Index>(pixels_per_plane()) * plane_count();
  }

  double pixel_pitch() const noexcept { return 2.0 * extent_ / pixels_; }
  double pixel_area() const noexcept { return pixel_pitch() * pixel_pitch(); }
  /// Center coordinate of pixel index i along one axis.
  double pixel_center(int i) const noexcept { return -extent_ + (i + 0.5) * pixel_pitch(); }

  bool operator==(const ScanGeometry&) const = default;

 private:
  int pixels_;
  double extent_;
  std::vector<double> planes_;
};

/// Point in the scan's natural variables: radius / w(z), azimuth, z / z_R.
struct NormalizedPoint {
  double radius = 0.0;
  double phi = 0.0;
  double zeta = 0.0;
};

/// sqrt(2^{|l|+1} / (pi |l|!)), the p = 0 mode normalization rescaled to the
/// normalized plane.
double mode_norm(int ell);

/// C_{l l'} = radius^{|l|+|l'|} e^{i(l-l')phi} e^{i[psi_l - psi_l']}.
Complex coefficient(int ell, int ell_prime, const NormalizedPoint& point);

/// w(z)^2 <r,phi,z|rho|r,phi,z>, normalized so its integral over the
/// normalized plane is Tr(rho).
double pixel_probability(const DensityMatrix& rho, const NormalizedPoint& point);
/// Same functional with the imaginary part kept, for reality checks.
Complex pixel_probability_complex(const CMatrix& rho, const std::vector<int>& ells,
                                  const NormalizedPoint& point);

enum class Execution { serial, parallel };

/// Real (n^2 Z) x d^2 matrix taking Hermitian coordinates to pixel readings.
class MeasurementMap {
 public:
  MeasurementMap(ModeBasis basis, ScanGeometry geometry, RMatrix matrix);

  const ModeBasis& basis() const noexcept { return basis_; }
  const ScanGeometry& geometry() const noexcept { return geometry_; }
  const RMatrix& matrix() const noexcept { return matrix_; }

  RVector apply(const DensityMatrix& rho) const;
  RVector apply(const CMatrix& hermitian) const;

 private:
  ModeBasis basis_;
  ScanGeometry geometry_;
  RMatrix matrix_;
};

MeasurementMap build_measurement_map(const ModeBasis& basis, const ScanGeometry& geometry,
                                     Execution exec = Execution::parallel);

/// Count of singular values above tol * sigma_max.
int independent_detections(const MeasurementMap& map, double tol = kDefaultRankTolerance);
int numerical_rank(const RMatrix& m, double tol = kDefaultRankTolerance);

struct IntensityScan {
  ScanGeometry geometry;
  RVector values;
  std::optional<double> photon_budget;
};

struct NoiseModel {
  /// Expected total photon count; nullopt means noiseless.
  std::optional<double> poisson_total;

  static NoiseModel none() { return {}; }
  static NoiseModel poisson(double total_counts);
};

IntensityScan simulate_scan(const DensityMatrix& rho, const MeasurementMap& map,
                            const NoiseModel& noise = NoiseModel::none(), std::uint64_t seed = 0);

namespace kernels {

// Reference and OpenMP assembly of the map matrix. Both resize `out` to
// (geometry.rows(), d^2) and write every row.
void assemble_map_serial(const ModeBasis& basis, const ScanGeometry& geometry, RMatrix& out);
void assemble_map_parallel(const ModeBasis& basis, const ScanGeometry& geometry, RMatrix& out);

}  // namespace kernels

}  // namespace oamtomo
