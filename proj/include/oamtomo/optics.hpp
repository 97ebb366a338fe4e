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

// Laguerre-Gauss beam optics.
//
// Every function here is pure. Lengths are in the caller's units; the rest of
// the library works with w0 = 1 and z measured in Rayleigh ranges, which is
// what the default BeamGeometry gives you.

#pragma once

#include <complex>
#include <numbers>

namespace oamtomo {

using Complex = std::complex<double>;

/// Waist radius and wave number of a paraxial beam focused at z = 0.
class BeamGeometry {
 public:
  /// Defaults give w0 = 1 and z_R = 1.
  explicit BeamGeometry(double waist = 1.0, double wave_number = 2.0);

  double waist() const noexcept { return waist_; }
  double wave_number() const noexcept { return wave_number_; }
  /// z_R = k w0^2 / 2, always recomputed from the stored fields.
  double rayleigh_range() const noexcept { return 0.5 * wave_number_ * waist_ * waist_; }

  bool operator==(const BeamGeometry&) const = default;

 private:
  double waist_;
  double wave_number_;
};

/// LG mode label. p is the radial index and defaults to 0.
struct ModeIndex {
  int ell = 0;
  int p = 0;

  ModeIndex() = default;
  ModeIndex(int ell_, int p_ = 0);
};

/// Cylindrical point (r, phi, z). phi is wrapped into [0, 2*pi).
class TransversePoint {
 public:
  TransversePoint(double r, double phi, double z);

  double r() const noexcept { return r_; }
  double phi() const noexcept { return phi_; }
  double z() const noexcept { return z_; }

 private:
  double r_;
  double phi_;
  double z_;
};

double beam_radius(const BeamGeometry& g, double z);

double gouy_phase(const ModeIndex& m, const BeamGeometry& g, double z);

/// Reciprocal wavefront curvature 1/R(z); zero at the waist.
double wavefront_curvature(const BeamGeometry& g, double z);

/// Generalized Laguerre polynomial L_n^alpha(x) by the ascending three-term
/// recurrence.
double generalized_laguerre(int n, double alpha, double x);

/// Full LG_{p,ell}(r, phi, z) including the curvature and Gouy phases and the
/// e^{-i ell phi} winding.
Complex lg_amplitude(const ModeIndex& m, const BeamGeometry& g, const TransversePoint& pt);

}  // namespace oamtomo
