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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oamtomo/error.hpp"
#include "oamtomo/optics.hpp"
#include "oamtomo/sensor.hpp"

using namespace oamtomo;
using std::numbers::pi;

namespace {

DensityMatrix basis_projector(const ModeBasis& b, int ell) {
  CMatrix m = CMatrix::Zero(b.dimension(), b.dimension());
  m(*b.index_of(ell), *b.index_of(ell)) = 1.0;
  return DensityMatrix(b, m);
}

NormalizedPoint pixel_point(const ScanGeometry& g, Eigen::Index row) {
  const int n = g.pixels_per_side();
  const auto plane = static_cast<std::size_t>(row / g.pixels_per_plane());
  const int pixel = static_cast<int>(row % g.pixels_per_plane());
  const double x = g.pixel_center(pixel % n);
  const double y = g.pixel_center(pixel / n);
  return {std::hypot(x, y), std::atan2(y, x), g.planes()[plane]};
}

}  // namespace

TEST_CASE("scan geometry") {
  const ScanGeometry g = ScanGeometry::with_default_planes(4);
  CHECK(g.pixels_per_side() == 19);
  CHECK(g.extent() == 3.0);
  CHECK(g.planes() == std::vector<double>{0.0, 1.0 / 3.0, 0.5, 1.0});
  CHECK(g.rows() == 361 * 4);
  CHECK(g.pixel_center(0) == doctest::Approx(-3.0 + 3.0 / 19.0));
  CHECK(g.pixel_center(9) == doctest::Approx(0.0));
  CHECK(g.pixel_center(18) == doctest::Approx(3.0 - 3.0 / 19.0));
  CHECK(default_planes().size() == 10);
  CHECK_THROWS_AS(ScanGeometry(0, 3.0, {0.0}), InvalidArgument);
  CHECK_THROWS_AS(ScanGeometry(19, 0.0, {0.0}), InvalidArgument);
  CHECK_THROWS_AS(ScanGeometry(19, 3.0, {0.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(ScanGeometry::with_default_planes(11), InvalidArgument);
}

TEST_CASE("coefficient examples") {
  CHECK(coefficient(0, 0, {0.7, 1.1, 0.4}) == Complex(1.0, 0.0));
  const Complex c = coefficient(3, -3, {1.0, 0.0, 0.0});
  CHECK(std::abs(c - Complex(1.0, 0.0)) <= 1e-15);
  const Complex i = coefficient(2, 0, {1.0, 0.0, 1.0});
  CHECK(std::abs(i - Complex(0.0, 1.0)) <= 1e-15);

  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int t = 0; t < 50; ++t) {
    const NormalizedPoint p{u(gen), 3.0 * u(gen), u(gen) - 1.0};
    for (int a = -4; a <= 4; ++a) {
      for (int b = -4; b <= 4; ++b) CHECK(std::abs(coefficient(b, a, p) - std::conj(coefficient(a, b, p))) <= 1e-12);
    }
  }
}

TEST_CASE("mode normalization constants") {
  CHECK(mode_norm(0) * mode_norm(0) == doctest::Approx(2.0 / pi));
  CHECK(mode_norm(3) * mode_norm(3) == doctest::Approx(16.0 / (6.0 * pi)));
  CHECK(mode_norm(-3) == mode_norm(3));
}

TEST_CASE("pixel probability examples") {
  const ModeBasis b = ModeBasis::symmetric(3);
  const DensityMatrix vacuum = basis_projector(b, 0);
  for (double r : {0.0, 0.4, 1.3}) {
    CHECK(pixel_probability(vacuum, {r, 0.9, 0.5}) == doctest::Approx(2.0 / pi * std::exp(-2 * r * r)).epsilon(1e-14));
  }

  CMatrix mix = CMatrix::Zero(7, 7);
  mix(*b.index_of(3), *b.index_of(3)) = 0.5;
  mix(*b.index_of(-3), *b.index_of(-3)) = 0.5;
  const DensityMatrix incoherent(b, mix);
  for (double zeta : {0.0, 0.5, 1.0, 3.0}) {
    const double ref = pixel_probability(incoherent, {1.1, 0.0, zeta});
    for (double phi : {0.3, 1.0, 2.5, 4.0}) {
      CHECK(pixel_probability(incoherent, {1.1, phi, zeta}) == doctest::Approx(ref).epsilon(1e-13));
    }
  }

  // (|3> + |-3>)/sqrt(2) at the waist: N_3^2 r^6 e^{-2r^2} (1 + cos 6 phi).
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(7);
  psi(*b.index_of(3)) = psi(*b.index_of(-3)) = 1.0 / std::sqrt(2.0);
  const DensityMatrix petals(b, psi * psi.adjoint());
  const double n3 = 16.0 / (6.0 * pi);
  for (double r : {0.5, 1.0, 1.6}) {
    for (double phi : {0.0, 0.2, 0.5, 1.9}) {
      const double expected = n3 * std::pow(r, 6) * std::exp(-2 * r * r) * (1 + std::cos(6 * phi));
      CHECK(std::abs(pixel_probability(petals, {r, phi, 0.0}) - expected) <= 1e-13);
    }
  }
}

TEST_CASE("forward model agrees with superposed LG amplitudes") {
  // w(z)^2 |sum_l c_l LG_0l(r, phi, z)|^2 at r = radius w(z), z = zeta z_R.
  const BeamGeometry optics(1.7, 3.0);
  const ModeBasis b(std::vector<int>{-4, -2, -1, 0, 1, 3, 5}, optics);
  std::mt19937_64 gen(41);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXcd c(b.dimension());
    for (auto& x : c) x = {n(gen), n(gen)};
    c.normalize();
    const DensityMatrix rho(b, c * c.adjoint());
    const NormalizedPoint p{2.5 * u(gen), 2 * pi * u(gen), 4.0 * u(gen) - 2.0};
    const double z = p.zeta * optics.rayleigh_range();
    const double w = beam_radius(optics, z);
    Complex field = 0.0;
    for (int i = 0; i < b.dimension(); ++i) {
      field += c(i) * lg_amplitude(ModeIndex(b.ells()[static_cast<std::size_t>(i)]), optics,
                                   TransversePoint(p.radius * w, p.phi, z));
    }
    CHECK(std::abs(pixel_probability(rho, p) - w * w * std::norm(field)) <= 1e-10);
  }
}

TEST_CASE("forward model is real for Hermitian states") {
  const ModeBasis b = ModeBasis::symmetric(7);
  const ScanGeometry g = ScanGeometry::with_default_planes(4);
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const DensityMatrix rho = random_state(b, 1 + static_cast<int>(s % 15), s);
    for (Eigen::Index row = 0; row < g.rows(); row += 7) {
      const Complex v = pixel_probability_complex(rho.matrix(), b.ells(), pixel_point(g, row));
      worst = std::max(worst, std::abs(v.imag()));
      CHECK(v.real() >= -1e-12);
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("measurement map rows are pixel probabilities times pixel area") {
  const ModeBasis one({0});
  const ScanGeometry g = ScanGeometry::with_default_planes(3, 7, 2.0);
  const MeasurementMap m1 = build_measurement_map(one, g);
  CHECK(m1.matrix().cols() == 1);
  for (Eigen::Index row = 0; row < g.rows(); ++row) {
    const double r = pixel_point(g, row).radius;
    CHECK(m1.matrix()(row, 0) == doctest::Approx(2.0 / pi * std::exp(-2 * r * r) * g.pixel_area()).epsilon(1e-14));
  }

  const ModeBasis b = ModeBasis::symmetric(2);
  const MeasurementMap map = build_measurement_map(b, g);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const DensityMatrix rho = random_state(b, 2, s);
    const RVector scan = map.apply(rho);
    for (Eigen::Index row = 0; row < g.rows(); ++row) {
      CHECK(scan(row) == doctest::Approx(pixel_probability(rho, pixel_point(g, row)) * g.pixel_area()).epsilon(1e-12));
      CHECK(scan(row) >= -1e-10);
    }
  }
}

TEST_CASE("planes integrate to the trace") {
  const ModeBasis b = ModeBasis::symmetric(7);
  const ScanGeometry g = ScanGeometry::with_default_planes(4);
  const MeasurementMap map = build_measurement_map(b, g);
  const RVector vac = map.apply(basis_projector(b, 0));
  for (int plane = 0; plane < 4; ++plane) {
    CHECK(vac.segment(plane * 361, 361).sum() == doctest::Approx(1.0).epsilon(1e-7));
  }
}

TEST_CASE("independent detections at the published counts") {
  const ModeBasis b = ModeBasis::symmetric(7);
  const MeasurementMap z1 = build_measurement_map(b, ScanGeometry::with_default_planes(1));
  CHECK(z1.matrix().rows() == 361);
  CHECK(z1.matrix().cols() == 225);
  CHECK(independent_detections(z1) == 78);
  CHECK(independent_detections(build_measurement_map(b, ScanGeometry::with_default_planes(2))) == 146);
  CHECK(independent_detections(build_measurement_map(b, ScanGeometry::with_default_planes(8))) == 218);
  CHECK(independent_detections(build_measurement_map(ModeBasis::nonnegative(5), ScanGeometry::with_default_planes(1))) ==
        25);
  CHECK_THROWS_AS(numerical_rank(RMatrix()), InvalidArgument);
  CHECK_THROWS_AS(independent_detections(z1, 0.0), InvalidArgument);
}

TEST_CASE("rank is monotone in the number of planes") {
  for (int lmax : {2, 4}) {
    const ModeBasis b = ModeBasis::symmetric(lmax);
    int previous = 0;
    for (int z = 1; z <= 10; ++z) {
      const int n = independent_detections(build_measurement_map(b, ScanGeometry::with_default_planes(z)));
      CHECK(n >= previous);
      CHECK(n <= b.dimension() * b.dimension());
      previous = n;
    }
  }
}

TEST_CASE("single-plane degeneracy between the pairs (1,-1) and (2,0)") {
  // Both pairs carry radius^2 e^{-2i phi}; one plane cannot tell them apart.
  const ScanGeometry one_plane(19, 3.0, {0.5});
  Eigen::MatrixXcd functionals(one_plane.rows(), 2);
  for (Eigen::Index row = 0; row < one_plane.rows(); ++row) {
    const NormalizedPoint p = pixel_point(one_plane, row);
    functionals(row, 0) = coefficient(1, -1, p);
    functionals(row, 1) = coefficient(2, 0, p);
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(functionals);
  CHECK(svd.singularValues()(1) <= 1e-12 * svd.singularValues()(0));

  // Same statement on the real map columns: the four real columns of the two
  // pairs span 2 dimensions at one plane and 4 once a second plane is added.
  const ModeBasis b = ModeBasis::symmetric(2);  // ells -2..2
  auto pair_columns = [&](const MeasurementMap& map) {
    auto column_of = [&](int i, int j) {
      const int d = b.dimension();
      int k = d;
      for (int a = 0; a < d; ++a) {
        for (int c = a + 1; c < d; ++c) {
          if (a == i && c == j) return k;
          k += 2;
        }
      }
      return -1;
    };
    const int c1 = column_of(*b.index_of(-1), *b.index_of(1));
    const int c2 = column_of(*b.index_of(0), *b.index_of(2));
    RMatrix sub(map.matrix().rows(), 4);
    sub << map.matrix().col(c1), map.matrix().col(c1 + 1), map.matrix().col(c2), map.matrix().col(c2 + 1);
    return sub;
  };
  CHECK(numerical_rank(pair_columns(build_measurement_map(b, one_plane))) == 2);
  CHECK(numerical_rank(pair_columns(build_measurement_map(b, ScanGeometry(19, 3.0, {0.0, 0.5})))) == 4);
}

TEST_CASE("nonnegative span is complete from one plane") {
  for (int d = 2; d <= 8; ++d) {
    CHECK(independent_detections(build_measurement_map(ModeBasis::nonnegative(d), ScanGeometry::with_default_planes(1))) ==
          d * d);
  }
}

TEST_CASE("simulated scans") {
  const ModeBasis b = ModeBasis::symmetric(2);
  const MeasurementMap map = build_measurement_map(b, ScanGeometry::with_default_planes(2));
  const DensityMatrix vac = basis_projector(b, 0);
  const IntensityScan clean = simulate_scan(vac, map);
  CHECK_FALSE(clean.photon_budget.has_value());
  CHECK((clean.values - map.apply(vac)).cwiseAbs().maxCoeff() <= 1e-300);

  const IntensityScan bright = simulate_scan(vac, map, NoiseModel::poisson(1e12), 5);
  CHECK(bright.photon_budget == 1e12);
  CHECK((bright.values - clean.values).cwiseAbs().maxCoeff() / clean.values.maxCoeff() < 1e-4);
  CHECK((bright.values.array() >= 0.0).all());

  const IntensityScan a = simulate_scan(vac, map, NoiseModel::poisson(1e5), 9);
  const IntensityScan again = simulate_scan(vac, map, NoiseModel::poisson(1e5), 9);
  CHECK(a.values == again.values);
  // Counts are integers on the rescaled axis.
  const double per_count = clean.values.sum() / 1e5;
  for (Eigen::Index i = 0; i < a.values.size(); ++i) {
    const double k = a.values(i) / per_count;
    CHECK(std::abs(k - std::round(k)) <= 1e-6);
  }
  CHECK_THROWS_AS(NoiseModel::poisson(0.0), InvalidArgument);
  CHECK_THROWS_AS(NoiseModel::poisson(-3.0), InvalidArgument);
}
