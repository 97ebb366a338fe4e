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

#include "oamtomo/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oamtomo/error.hpp"

namespace oamtomo {

namespace {

constexpr double kVectorizeTolerance = 1e-8;

}  // namespace

ModeBasis::ModeBasis(std::vector<int> ells, BeamGeometry geometry)
    : ells_(std::move(ells)), geometry_(geometry) {
  if (ells_.empty()) throw InvalidArgument("ModeBasis: at least one mode is required");
  for (std::size_t i = 1; i < ells_.size(); ++i) {
    if (ells_[i] <= ells_[i - 1]) {
      throw InvalidArgument("ModeBasis: ells must be strictly ascending");
    }
  }
}

ModeBasis ModeBasis::symmetric(int ell_max, BeamGeometry geometry) {
  if (ell_max < 0) throw InvalidArgument("ModeBasis::symmetric: ell_max must be >= 0");
  std::vector<int> ells;
  for (int l = -ell_max; l <= ell_max; ++l) ells.push_back(l);
  return ModeBasis(std::move(ells), geometry);
}

ModeBasis ModeBasis::nonnegative(int dimension, BeamGeometry geometry) {
  if (dimension < 1) throw InvalidArgument("ModeBasis::nonnegative: dimension must be >= 1");
  std::vector<int> ells(static_cast<std::size_t>(dimension));
  for (int l = 0; l < dimension; ++l) ells[static_cast<std::size_t>(l)] = l;
  return ModeBasis(std::move(ells), geometry);
}

std::optional<int> ModeBasis::index_of(int ell) const {
  const auto it = std::lower_bound(ells_.begin(), ells_.end(), ell);
  if (it == ells_.end() || *it != ell) return std::nullopt;
  return static_cast<int>(it - ells_.begin());
}

std::string StateCheck::failures() const {
  std::ostringstream out;
  auto add = [&out, first = true](const std::string& s) mutable {
    if (!first) out << "; ";
    out << s;
    first = false;
  };
  if (!square) add("matrix is not square");
  if (!hermitian) add("not Hermitian (max |a_ij - conj(a_ji)| = " + std::to_string(max_asymmetry) + ")");
  if (!psd) add("not positive semidefinite (min eigenvalue = " + std::to_string(min_eigenvalue) + ")");
  if (!unit_trace) add("trace is not 1 (trace = " + std::to_string(trace) + ")");
  return out.str();
}

StateCheck check_state(const CMatrix& m) {
  StateCheck c;
  if (m.rows() != m.cols() || m.rows() == 0) {
    c.square = c.hermitian = c.psd = c.unit_trace = false;
    return c;
  }
  c.max_asymmetry = (m - m.adjoint()).cwiseAbs().maxCoeff();
  c.hermitian = c.max_asymmetry <= kHermitianTolerance;
  const CMatrix herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(herm, Eigen::EigenvaluesOnly);
  c.min_eigenvalue = eig.eigenvalues().minCoeff();
  c.psd = c.min_eigenvalue >= -kPsdTolerance;
  c.trace = m.trace().real();
  c.unit_trace = std::abs(m.trace() - Complex(1.0, 0.0)) <= kTraceTolerance;
  return c;
}

DensityMatrix::DensityMatrix(ModeBasis basis, CMatrix entries)
    : basis_(std::move(basis)), entries_(std::move(entries)) {
  if (entries_.rows() != basis_.dimension() || entries_.cols() != basis_.dimension()) {
    throw InvalidArgument("DensityMatrix: matrix shape does not match basis dimension");
  }
  const StateCheck check = check_state(entries_);
  if (!check.ok()) throw InvalidArgument("DensityMatrix: " + check.failures());
}

double DensityMatrix::purity() const { return (entries_ * entries_).trace().real(); }

RVector vectorize(const CMatrix& h) {
  if (h.rows() != h.cols()) throw InvalidArgument("vectorize: matrix must be square");
  const Eigen::Index d = h.rows();
  if (d > 0 && (h - h.adjoint()).cwiseAbs().maxCoeff() > kVectorizeTolerance) {
    throw InvalidArgument("vectorize: matrix is not Hermitian");
  }
  RVector out(d * d);
  for (Eigen::Index i = 0; i < d; ++i) out(i) = h(i, i).real();
  Eigen::Index k = d;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      // Average the two triangles so tiny asymmetries do not bias the result.
      const Complex v = 0.5 * (h(i, j) + std::conj(h(j, i)));
      out(k++) = std::numbers::sqrt2 * v.real();
      out(k++) = std::numbers::sqrt2 * v.imag();
    }
  }
  return out;
}

HermitianVector vectorize(const DensityMatrix& rho) {
  return HermitianVector{rho.basis(), vectorize(rho.matrix())};
}

CMatrix matricize(const Eigen::Ref<const RVector>& coords) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(coords.size()))));
  if (d * d != coords.size()) throw InvalidArgument("matricize: length is not a perfect square");
  CMatrix h(d, d);
  for (Eigen::Index i = 0; i < d; ++i) h(i, i) = Complex(coords(i), 0.0);
  Eigen::Index k = d;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const Complex v(coords(k) / std::numbers::sqrt2, coords(k + 1) / std::numbers::sqrt2);
      h(i, j) = v;
      h(j, i) = std::conj(v);
      k += 2;
    }
  }
  return h;
}

DensityMatrix random_state(const ModeBasis& basis, int rank, std::uint64_t seed) {
  const int d = basis.dimension();
  if (rank < 1 || rank > d) throw InvalidArgument("random_state: rank must lie in [1, d]");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix g(d, rank);
  for (int j = 0; j < rank; ++j) {
    for (int i = 0; i < d; ++i) {
      const double re = normal(gen);
      const double im = normal(gen);
      g(i, j) = Complex(re, im);
    }
  }
  CMatrix rho = g * g.adjoint();
  rho = 0.5 * (rho + rho.adjoint());
  rho /= rho.trace().real();
  return DensityMatrix(basis, std::move(rho));
}

DensityMatrix test_state(double p, double theta, const ModeBasis& basis) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("test_state: p must lie in [0, 1]");
  const auto i0 = basis.index_of(0);
  const auto im3 = basis.index_of(-3);
  const auto ip3 = basis.index_of(3);
  if (!i0 || !im3 || !ip3) {
    throw InvalidArgument("test_state: basis must contain the modes -3, 0 and 3");
  }
  const int d = basis.dimension();
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(d);
  psi(*im3) = std::cos(theta);
  psi(*ip3) = std::sin(theta);
  CMatrix rho = (1.0 - p) * psi * psi.adjoint();
  rho(*i0, *i0) += p;
  return DensityMatrix(basis, std::move(rho));
}

double hs_error(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument("hs_error: matrix shapes differ");
  }
  // Tr[(a-b)^2] = sum |(a-b)_ij|^2 for Hermitian arguments.
  return (a - b).squaredNorm();
}

double hs_error(const DensityMatrix& a, const DensityMatrix& b) {
  if (!(a.basis() == b.basis())) throw InvalidArgument("hs_error: bases differ");
  return hs_error(a.matrix(), b.matrix());
}

RVector project_simplex(const RVector& v, double total) {
  const Eigen::Index n = v.size();
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double shift = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += sorted[static_cast<std::size_t>(k)];
    const double candidate = (cumulative - total) / static_cast<double>(k + 1);
    if (sorted[static_cast<std::size_t>(k)] - candidate > 0.0) shift = candidate;
  }
  return (v.array() - shift).max(0.0).matrix();
}

CMatrix project_psd(const CMatrix& h, TraceMode mode) {
  const CMatrix herm = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(herm);
  RVector lambda = eig.eigenvalues();
  if (mode == TraceMode::unit) {
    lambda = project_simplex(lambda, 1.0);
  } else {
    lambda = lambda.cwiseMax(0.0);
  }
  const CMatrix& v = eig.eigenvectors();
  CMatrix out = v * lambda.cast<Complex>().asDiagonal() * v.adjoint();
  return 0.5 * (out + out.adjoint());
}

std::optional<CMatrix> trace_normalized(const CMatrix& h) {
  const double tr = h.trace().real();
  if (!(tr > 1e-300) || !std::isfinite(tr)) return std::nullopt;
  return CMatrix(h / tr);
}

}  // namespace oamtomo
