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

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "oamtomo/sensor.hpp"

namespace oamtomo::kernels {

namespace {

struct ModeTable {
  std::vector<int> ells;
  std::vector<int> abs_ells;
  std::vector<double> norms;
};

ModeTable make_table(const ModeBasis& basis) {
  ModeTable t;
  t.ells = basis.ells();
  for (int l : t.ells) {
    t.abs_ells.push_back(std::abs(l));
    t.norms.push_back(mode_norm(l));
  }
  return t;
}

void fit_shape(const ModeBasis& basis, const ScanGeometry& geometry, RMatrix& out) {
  const Eigen::Index d = basis.dimension();
  out.resize(geometry.rows(), d * d);
}

// One map row. `amp` is scratch of length d.
//
// With u_l = N_l radius^|l| e^{-radius^2} e^{-i(l phi + psi_l)} the reading is
// sum_ij rho_ij u_i conj(u_j). Splitting rho_ij into its Hermitian coordinates
// gives |u_i|^2 on the diagonal and sqrt(2) Re / -sqrt(2) Im of u_i conj(u_j)
// for each upper-triangle pair.
void fill_row(const ModeTable& t, const ScanGeometry& g, Eigen::Index row, RMatrix& out,
              std::vector<Complex>& amp) {
  const int per_plane = g.pixels_per_plane();
  const int plane = static_cast<int>(row / per_plane);
  const int pixel = static_cast<int>(row % per_plane);
  const int n = g.pixels_per_side();
  const double x = g.pixel_center(pixel % n);
  const double y = g.pixel_center(pixel / n);
  const double radius = std::hypot(x, y);
  const double phi = std::atan2(y, x);
  const double arctan_zeta = std::atan(g.planes()[static_cast<std::size_t>(plane)]);
  const double area = g.pixel_area();
  const double gauss = std::exp(-radius * radius);

  const std::size_t d = t.ells.size();
  for (std::size_t i = 0; i < d; ++i) {
    const double mag = t.norms[i] * std::pow(radius, t.abs_ells[i]) * gauss;
    const double phase = -(t.ells[i] * phi + (t.abs_ells[i] + 1.0) * arctan_zeta);
    amp[i] = std::polar(mag, phase);
  }

  for (std::size_t i = 0; i < d; ++i) out(row, static_cast<Eigen::Index>(i)) = std::norm(amp[i]) * area;
  Eigen::Index col = static_cast<Eigen::Index>(d);
  const double s = std::numbers::sqrt2 * area;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const Complex k = amp[i] * std::conj(amp[j]);
      out(row, col++) = s * k.real();
      out(row, col++) = -s * k.imag();
    }
  }
}

}  // namespace

void assemble_map_serial(const ModeBasis& basis, const ScanGeometry& geometry, RMatrix& out) {
  fit_shape(basis, geometry, out);
  const ModeTable table = make_table(basis);
  std::vector<Complex> amp(table.ells.size());
  for (Eigen::Index row = 0; row < out.rows(); ++row) fill_row(table, geometry, row, out, amp);
}

void assemble_map_parallel(const ModeBasis& basis, const ScanGeometry& geometry, RMatrix& out) {
  fit_shape(basis, geometry, out);
  const ModeTable table = make_table(basis);
  const Eigen::Index rows = out.rows();
#pragma omp parallel
  {
    std::vector<Complex> amp(table.ells.size());
#pragma omp for schedule(static)
    for (Eigen::Index row = 0; row < rows; ++row) fill_row(table, geometry, row, out, amp);
  }
}

}  // namespace oamtomo::kernels
