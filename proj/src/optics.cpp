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

#include "oamtomo/optics.hpp"

#include <cmath>
#include <cstdlib>

#include "oamtomo/error.hpp"

namespace oamtomo {

BeamGeometry::BeamGeometry(double waist, double wave_number)
    : waist_(waist), wave_number_(wave_number) {
  if (!(waist > 0.0) || !(wave_number > 0.0)) {
    throw InvalidArgument("BeamGeometry: waist and wave number must be positive");
  }
}

ModeIndex::ModeIndex(int ell_, int p_) : ell(ell_), p(p_) {
  if (p_ < 0) throw InvalidArgument("ModeIndex: radial index p must be >= 0");
}

TransversePoint::TransversePoint(double r, double phi, double z) : r_(r), z_(z) {
  if (!(r >= 0.0)) throw InvalidArgument("TransversePoint: r must be >= 0");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  phi_ = std::fmod(phi, two_pi);
  if (phi_ < 0.0) phi_ += two_pi;
  if (phi_ >= two_pi) phi_ = 0.0;
}

double beam_radius(const BeamGeometry& g, double z) {
  const double zeta = z / g.rayleigh_range();
  return g.waist() * std::sqrt(1.0 + zeta * zeta);
}

double gouy_phase(const ModeIndex& m, const BeamGeometry& g, double z) {
  const double order = 2.0 * m.p + std::abs(m.ell) + 1.0;
  return order * std::atan(z / g.rayleigh_range());
}

double wavefront_curvature(const BeamGeometry& g, double z) {
  // 1/R = z / (z^2 + z_R^2), the regular form of 1/(z[1 + (z_R/z)^2]).
  const double zr = g.rayleigh_range();
  return z / (z * z + zr * zr);
}

double generalized_laguerre(int n, double alpha, double x) {
  if (n < 0) throw InvalidArgument("generalized_laguerre: order must be >= 0");
  if (n == 0) return 1.0;
  double prev = 1.0;
  double curr = 1.0 + alpha - x;
  for (int k = 1; k < n; ++k) {
    const double next = ((2.0 * k + 1.0 + alpha - x) * curr - (k + alpha) * prev) / (k + 1.0);
    prev = curr;
    curr = next;
  }
  return curr;
}

Complex lg_amplitude(const ModeIndex& m, const BeamGeometry& g, const TransversePoint& pt) {
  const int abs_ell = std::abs(m.ell);
  const double w = beam_radius(g, pt.z());
  const double r = pt.r();

  // sqrt(2 p! / (pi (p+|l|)!)) through lgamma to stay finite for large orders.
  const double log_norm =
      0.5 * (std::log(2.0) + std::lgamma(m.p + 1.0) - std::log(std::numbers::pi) -
             std::lgamma(m.p + abs_ell + 1.0));
  const double scaled = std::sqrt(2.0) * r / w;
  const double envelope = std::exp(log_norm) / w * std::pow(scaled, abs_ell) *
                          generalized_laguerre(m.p, abs_ell, 2.0 * r * r / (w * w)) *
                          std::exp(-r * r / (w * w));

  const double phase = 0.5 * r * r * g.wave_number() * wavefront_curvature(g, pt.z()) -
                       m.ell * pt.phi() - gouy_phase(m, g, pt.z());
  return std::polar(envelope, phase);
}

}  // namespace oamtomo
