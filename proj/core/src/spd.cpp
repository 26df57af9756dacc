// Copyright 2026 The rpd Authors
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

#include "rpd/spd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rpd/errors.hpp"

namespace rpd {
namespace {

constexpr double kMachineEps = std::numeric_limits<double>::epsilon();

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

// Rounding slack for eigenvalues recomputed from a reconstructed matrix.
double eigen_rounding(Eigen::Index n, double scale) {
  return 16.0 * static_cast<double>(n) * kMachineEps * std::max(1.0, scale);
}

void require_same_dim(const SpdMatrix& a, const SpdMatrix& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw ArgumentError(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) +
                        " vs " + std::to_string(b.dim()) + ")");
  }
}

}  // namespace

bool is_square(const Matrix& a) { return a.rows() == a.cols(); }

bool is_symmetric(const Matrix& a) {
  if (!is_square(a)) return false;
  const double tol = kSymmetryTolerance * std::max(1.0, max_abs(a));
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = j + 1; i < a.rows(); ++i) {
      if (std::abs(a(i, j) - a(j, i)) > tol) return false;
    }
  }
  return true;
}

Matrix symmetrize(const Matrix& a) {
  Matrix s = 0.5 * (a + a.transpose());
  return s;
}

EigenDecomposition symmetric_eigen(const Matrix& a) {
  if (!is_square(a)) throw ArgumentError("symmetric_eigen: matrix is not square");
  if (!a.allFinite()) throw NumericError("symmetric_eigen: non-finite entries");
  const Eigen::Index n = a.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericError("symmetric_eigen: eigensolver did not converge");

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  // Eigen returns ascending order.
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = n - 1 - k;
    out.eigenvalues[k] = solver.eigenvalues()[src];
    Vector q = solver.eigenvectors().col(src);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (q[i] != 0.0) {
        if (q[i] < 0.0) q = -q;
        break;
      }
    }
    out.eigenvectors.col(k) = q;
  }
  return out;
}

Matrix reconstruct(const Matrix& eigenvectors, const Vector& values) {
  Matrix r = eigenvectors * values.asDiagonal() * eigenvectors.transpose();
  return symmetrize(r);
}

SpdMatrix::SpdMatrix(const Matrix& a) {
  if (a.size() == 0) throw ArgumentError("SpdMatrix: empty matrix");
  if (!is_square(a)) throw InvariantError("SpdMatrix: matrix is not square");
  if (!a.allFinite()) throw InvariantError("SpdMatrix: non-finite entries");
  if (!is_symmetric(a)) throw InvariantError("SpdMatrix: matrix is not symmetric");
  m_ = symmetrize(a);
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(m_, Eigen::EigenvaluesOnly).eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  if (ev.minCoeff() < kPdEpsilon - eigen_rounding(m_.rows(), scale)) {
    throw InvariantError("SpdMatrix: smallest eigenvalue " + std::to_string(ev.minCoeff()) +
                         " is below the positive-definiteness floor");
  }
}

SpdMatrix SpdMatrix::identity(Eigen::Index n) {
  if (n <= 0) throw ArgumentError("SpdMatrix::identity: dimension must be positive");
  return SpdMatrix(Matrix::Identity(n, n));
}

SpdMatrix SpdMatrix::diagonal(const Vector& d) { return SpdMatrix(Matrix(d.asDiagonal())); }

double SpdMatrix::min_eigenvalue() const {
  return Eigen::SelfAdjointEigenSolver<Matrix>(m_, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double logdet_divergence(const SpdMatrix& w, const SpdMatrix& w0) {
  require_same_dim(w, w0, "logdet_divergence");
  Eigen::LLT<Matrix> llt(w0.matrix());
  if (llt.info() != Eigen::Success) throw NumericError("logdet_divergence: Cholesky of W0 failed");
  // M = L^-1 W L^-T shares its eigenvalues with W W0^-1.
  Matrix tmp = llt.matrixL().solve(w.matrix());
  Matrix m = llt.matrixL().solve(tmp.transpose());
  m = symmetrize(m);
  const Vector mu = Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly).eigenvalues();
  double d = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (!(mu[i] > 0.0)) throw NumericError("logdet_divergence: W W0^-1 has a nonpositive eigenvalue");
    d += (mu[i] - 1.0) - std::log(mu[i]);
  }
  return std::max(d, 0.0);
}

Matrix logdet_divergence_gradient(const SpdMatrix& w, const SpdMatrix& w0) {
  require_same_dim(w, w0, "logdet_divergence_gradient");
  if (w == w0) return Matrix::Zero(w.dim(), w.dim());
  return symmetrize(spd_inverse(w0).matrix() - spd_inverse(w).matrix());
}

Matrix project_to_tangent(const Matrix& euclidean_grad, const SpdMatrix& w) {
  if (euclidean_grad.rows() != w.dim() || euclidean_grad.cols() != w.dim()) {
    throw ArgumentError("project_to_tangent: gradient shape does not match the base point");
  }
  return symmetrize(euclidean_grad);
}

SpdMatrix retract(const SpdMatrix& w, const Matrix& step) {
  if (step.rows() != w.dim() || step.cols() != w.dim()) {
    throw ArgumentError("retract: step shape does not match the base point");
  }
  if (!step.allFinite()) throw NumericError("retract: non-finite step");
  Matrix sum = symmetrize(w.matrix() + step);
  EigenDecomposition eig = symmetric_eigen(sum);
  const Eigen::Index n = w.dim();
  const double floor = kPdEpsilon + eigen_rounding(n, eig.eigenvalues.cwiseAbs().maxCoeff());
  if (eig.eigenvalues[n - 1] >= floor) return SpdMatrix(std::move(sum), SpdMatrix::Trusted{});

  Vector clipped = eig.eigenvalues.cwiseMax(floor);
  return SpdMatrix(reconstruct(eig.eigenvectors, clipped), SpdMatrix::Trusted{});
}

SpdMatrix spd_inverse(const SpdMatrix& w) {
  EigenDecomposition eig = symmetric_eigen(w.matrix());
  const Eigen::Index n = w.dim();
  if (eig.eigenvalues[n - 1] < kPdEpsilon - eigen_rounding(n, eig.eigenvalues[0])) {
    throw InvariantError("spd_inverse: eigenvalue below the positive-definiteness floor");
  }
  Vector inv = eig.eigenvalues.cwiseInverse();
  return SpdMatrix(reconstruct(eig.eigenvectors, inv), SpdMatrix::Trusted{});
}

}  // namespace rpd
