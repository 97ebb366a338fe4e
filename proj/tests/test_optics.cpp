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
#include "test_util.hpp"

using namespace oamtomo;
using std::numbers::pi;

TEST_CASE("beam geometry derives the Rayleigh range") {
  const BeamGeometry g(2.0, 3.0);
  CHECK(g.rayleigh_range() == doctest::Approx(6.0));
  CHECK(BeamGeometry{}.rayleigh_range() == 1.0);
  CHECK_THROWS_AS(BeamGeometry(0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(BeamGeometry(1.0, -1.0), InvalidArgument);
}

TEST_CASE("mode index and transverse point invariants") {
  CHECK(ModeIndex(3).p == 0);
  CHECK_THROWS_AS(ModeIndex(1, -1), InvalidArgument);
  CHECK_THROWS_AS(TransversePoint(-0.1, 0.0, 0.0), InvalidArgument);
  const TransversePoint pt(1.0, -pi / 2, 0.0);
  CHECK(pt.phi() == doctest::Approx(3 * pi / 2));
  CHECK(TransversePoint(1.0, 2 * pi, 0.0).phi() == 0.0);
  CHECK(TransversePoint(1.0, 5 * pi, 0.0).phi() == doctest::Approx(pi));
}

TEST_CASE("beam radius") {
  const BeamGeometry unit;
  CHECK(beam_radius(unit, 0.0) == 1.0);
  CHECK(beam_radius(unit, unit.rayleigh_range()) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  const BeamGeometry wide(2.0, 2.0);
  CHECK(beam_radius(wide, 2.0 * wide.rayleigh_range()) == doctest::Approx(2.0 * std::sqrt(5.0)).epsilon(1e-15));
  CHECK(beam_radius(wide, -3.0) == beam_radius(wide, 3.0));
}

TEST_CASE("gouy phase") {
  const BeamGeometry g;
  CHECK(gouy_phase(ModeIndex(0), g, 0.0) == 0.0);
  CHECK(gouy_phase(ModeIndex(3), g, 1.0) == doctest::Approx(pi).epsilon(1e-15));
  CHECK(gouy_phase(ModeIndex(-2), g, 1.0) == doctest::Approx(3 * pi / 4).epsilon(1e-15));
  CHECK(gouy_phase(ModeIndex(1, 2), g, 1.0) == doctest::Approx(6 * pi / 4).epsilon(1e-15));
  for (double z : {0.1, 0.7, 2.5, 40.0}) {
    for (int ell : {-5, 0, 4}) CHECK(gouy_phase(ModeIndex(ell), g, -z) == -gouy_phase(ModeIndex(ell), g, z));
  }
}

TEST_CASE("reciprocal wavefront curvature") {
  const BeamGeometry g(1.5, 4.0);
  const double zr = g.rayleigh_range();
  CHECK(wavefront_curvature(g, 0.0) == 0.0);
  CHECK(wavefront_curvature(g, zr) == doctest::Approx(1.0 / (2.0 * zr)));
  CHECK(wavefront_curvature(g, -zr) == doctest::Approx(-1.0 / (2.0 * zr)));
  const double z = 0.37 * zr;
  CHECK(wavefront_curvature(g, z) == doctest::Approx(1.0 / (z * (1.0 + (zr / z) * (zr / z)))));
}

TEST_CASE("Laguerre recurrence matches the explicit sum") {
  // L_n^a(x) = sum_k (-1)^k binom(n+a, n-k) x^k / k!
  auto explicit_sum = [](int n, double a, double x) {
    double total = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double binom = std::exp(std::lgamma(n + a + 1) - std::lgamma(n - k + 1.0) - std::lgamma(a + k + 1));
      total += (k % 2 ? -1.0 : 1.0) * binom * std::pow(x, k) / std::tgamma(k + 1.0);
    }
    return total;
  };
  for (int n = 0; n <= 6; ++n) {
    for (double a : {0.0, 1.0, 3.0, 7.0}) {
      for (double x : {0.0, 0.3, 1.7, 4.0}) {
        CHECK(generalized_laguerre(n, a, x) == doctest::Approx(explicit_sum(n, a, x)).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS_AS(generalized_laguerre(-1, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("LG amplitude point values") {
  const BeamGeometry g;
  CHECK(std::abs(lg_amplitude(ModeIndex(2), g, TransversePoint(0.0, 1.2, 0.0))) == 0.0);
  const Complex center = lg_amplitude(ModeIndex(0), g, TransversePoint(0.0, 0.0, 0.0));
  CHECK(center.real() == doctest::Approx(std::sqrt(2.0 / pi)).epsilon(1e-15));
  CHECK(center.imag() == 0.0);
}

TEST_CASE("LG modes are normalized (radial Simpson x azimuthal trapezoid oracle)") {
  const BeamGeometry g;
  for (int ell = -7; ell <= 7; ++ell) {
    for (double zeta : {0.0, 0.5, 1.0}) {
      const double z = zeta * g.rayleigh_range();
      const double r_max = 8.0 * beam_radius(g, z);
      const double norm = test::polar_quadrature(
          [&](double r, double phi) { return std::norm(lg_amplitude(ModeIndex(ell), g, TransversePoint(r, phi, z))); },
          r_max, 4000, 8);
      CAPTURE(ell);
      CAPTURE(zeta);
      CHECK(std::abs(norm - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("LG normalization holds for p > 0 too") {
  const BeamGeometry g(1.3, 2.0);
  for (int p : {1, 2}) {
    for (int ell : {0, 2, -3}) {
      const double norm = test::polar_quadrature(
          [&](double r, double phi) { return std::norm(lg_amplitude(ModeIndex(ell, p), g, TransversePoint(r, phi, 0.4))); },
          10.0 * beam_radius(g, 0.4), 4000, 4);
      CHECK(std::abs(norm - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("LG amplitude depends on |ell| and winds as e^{-i ell phi}") {
  const BeamGeometry g;
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> r_dist(0.05, 2.5), phi_dist(0.0, 2 * pi), z_dist(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double r = r_dist(gen);
    const double phi = phi_dist(gen);
    const double z = z_dist(gen);
    const double delta = phi_dist(gen);
    for (int ell = 1; ell <= 7; ++ell) {
      const Complex plus = lg_amplitude(ModeIndex(ell), g, TransversePoint(r, phi, z));
      const Complex minus = lg_amplitude(ModeIndex(-ell), g, TransversePoint(r, phi, z));
      CHECK(std::abs(plus) == doctest::Approx(std::abs(minus)).epsilon(1e-13));

      const Complex rotated = lg_amplitude(ModeIndex(ell), g, TransversePoint(r, phi + delta, z));
      const double winding = std::arg(rotated / plus);
      const double expected = std::remainder(-ell * delta, 2 * pi);
      CHECK(std::abs(std::remainder(winding - expected, 2 * pi)) <= 1e-9);
    }
  }
}
