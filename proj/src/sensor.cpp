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

#include "oamtomo/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>

#include "oamtomo/error.hpp"

namespace oamtomo {

const std::vector<double>& default_planes() {
  static const std::vector<double> planes{0.0, 1.0 / 3.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0};
  return planes;
}

ScanGeometry::ScanGeometry(int pixels_per_side, double extent, std::vector<double> planes)
    : pixels_(pixels_per_side), extent_(extent), planes_(std::move(planes)) {
  if (pixels_ < 1) throw InvalidArgument("ScanGeometry: pixels_per_side must be >= 1");
  if (!(extent_ > 0.0)) throw InvalidArgument("ScanGeometry: extent must be > 0");
  if (planes_.empty()) throw InvalidArgument("ScanGeometry: at least one plane is required");
  for (std::size_t i = 0; i < planes_.size(); ++i) {
    if (!std::isfinite(planes_[i])) throw InvalidArgument("ScanGeometry: plane positions must be finite");
    for (std::size_t j = 0; j < i; ++j) {
      if (planes_[i] == planes_[j]) throw InvalidArgument("ScanGeometry: plane positions must be distinct");
    }
  }
}

ScanGeometry ScanGeometry::with_default_planes(int planes, int pixels_per_side, double extent) {
  const auto& all = default_planes();
  if (planes < 1 || planes > static_cast<int>(all.size())) {
    throw InvalidArgument("ScanGeometry: default plane list holds between 1 and " +
                          std::to_string(all.size()) + " planes");
  }
  return ScanGeometry(pixels_per_side, extent,
                      std::vector<double>(all.begin(), all.begin() + planes));
}

double mode_norm(int ell) {
  const int a = std::abs(ell);
  return std::sqrt(std::exp((a + 1) * std::log(2.0) - std::lgamma(a + 1.0)) / std::numbers::pi);
}

Complex coefficient(int ell, int ell_prime, const NormalizedPoint& point) {
  const int a = std::abs(ell);
  const int b = std::abs(ell_prime);
  const double t = std::atan(point.zeta);
  // psi_l - psi_l' = (|l| - |l'|) arctan(zeta) at p = 0.
  const double phase = (ell - ell_prime) * point.phi + (a - b) * t;
  return std::polar(std::pow(point.radius, a + b), phase);
}

Complex pixel_probability_complex(const CMatrix& rho, const std::vector<int>& ells,
                                  const NormalizedPoint& point) {
  // rho_ll' pairs with conj(C_ll'): the LG modes carry e^{-i l phi - i psi_l},
  // so <x|l><l'|x> = N_l N_l' e^{-2 radius^2} conj(C_ll').
  const std::size_t d = ells.size();
  Complex sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      sum += rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * mode_norm(ells[i]) *
             mode_norm(ells[j]) * std::conj(coefficient(ells[i], ells[j], point));
    }
  }
  return std::exp(-2.0 * point.radius * point.radius) * sum;
}

double pixel_probability(const DensityMatrix& rho, const NormalizedPoint& point) {
  if (!(point.radius >= 0.0)) throw InvalidArgument("pixel_probability: radius must be >= 0");
  return pixel_probability_complex(rho.matrix(), rho.basis().ells(), point).real();
}

MeasurementMap::MeasurementMap(ModeBasis basis, ScanGeometry geometry, RMatrix matrix)
    : basis_(std::move(basis)), geometry_(std::move(geometry)), matrix_(std::move(matrix)) {
  const Eigen::Index d = basis_.dimension();
  if (matrix_.rows() != geometry_.rows() || matrix_.cols() != d * d) {
    throw InvalidArgument("MeasurementMap: matrix shape does not match basis and geometry");
  }
}

RVector MeasurementMap::apply(const DensityMatrix& rho) const {
  if (!(rho.basis() == basis_)) throw InvalidArgument("MeasurementMap::apply: basis mismatch");
  return matrix_ * vectorize(rho.matrix());
}

RVector MeasurementMap::apply(const CMatrix& hermitian) const {
  if (hermitian.rows() != basis_.dimension()) {
    throw InvalidArgument("MeasurementMap::apply: dimension mismatch");
  }
  return matrix_ * vectorize(hermitian);
}

MeasurementMap build_measurement_map(const ModeBasis& basis, const ScanGeometry& geometry,
                                     Execution exec) {
  const Eigen::Index d = basis.dimension();
  RMatrix a(geometry.rows(), d * d);
  if (exec == Execution::parallel) {
    kernels::assemble_map_parallel(basis, geometry, a);
  } else {
    kernels::assemble_map_serial(basis, geometry, a);
  }
  return MeasurementMap(basis, geometry, std::move(a));
}

int numerical_rank(const RMatrix& m, double tol) {
  if (m.size() == 0) throw InvalidArgument("numerical_rank: empty matrix");
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument("numerical_rank: tol must lie in (0, 1)");
  Eigen::BDCSVD<RMatrix> svd(m);
  const RVector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = tol * s(0);
  return static_cast<int>((s.array() > cut).count());
}

int independent_detections(const MeasurementMap& map, double tol) {
  return numerical_rank(map.matrix(), tol);
}

NoiseModel NoiseModel::poisson(double total_counts) {
  if (!(total_counts > 0.0)) throw InvalidArgument("NoiseModel::poisson: total counts must be > 0");
  NoiseModel n;
  n.poisson_total = total_counts;
  return n;
}

IntensityScan simulate_scan(const DensityMatrix& rho, const MeasurementMap& map,
                            const NoiseModel& noise, std::uint64_t seed) {
  RVector clean = map.apply(rho).cwiseMax(0.0);
  if (!noise.poisson_total) return IntensityScan{map.geometry(), std::move(clean), std::nullopt};

  const double budget = *noise.poisson_total;
  if (!(budget > 0.0)) throw InvalidArgument("simulate_scan: photon budget must be > 0");
  const double total = clean.sum();
  if (!(total > 0.0)) throw InvalidArgument("simulate_scan: state produces no signal");
  const double to_counts = budget / total;

  std::mt19937_64 gen(seed);
  RVector noisy(clean.size());
  for (Eigen::Index i = 0; i < clean.size(); ++i) {
    const double mean = clean(i) * to_counts;
    double count = 0.0;
    if (mean > 0.0) {
      std::poisson_distribution<long long> draw(mean);
      count = static_cast<double>(draw(gen));
    }
    noisy(i) = count / to_counts;
  }
  return IntensityScan{map.geometry(), std::move(noisy), budget};
}

}  // namespace oamtomo
