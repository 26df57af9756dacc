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

#pragma once

// Geometry of the manifold of symmetric positive definite matrices:
// the point type, a deterministic symmetric eigensolver, the LogDet
// divergence and its gradient, tangent projection and the
// eigenvalue-clipping retraction.

#include <Eigen/Dense>

namespace rpd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenvalue floor that keeps every manifold point strictly positive definite.
inline constexpr double kPdEpsilon = 1e-8;

/// Relative tolerance of the symmetry invariant.
inline constexpr double kSymmetryTolerance = 1e-10;

bool is_square(const Matrix& a);

/// max |A - A^T| <= kSymmetryTolerance * max(1, max|A|).
bool is_symmetric(const Matrix& a);

/// (A + A^T) / 2. Idempotent in floating point.
Matrix symmetrize(const Matrix& a);

struct EigenDecomposition {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column i pairs with eigenvalues[i]
};

/// Eigendecomposition of a symmetric matrix. Eigenvalues come back in
/// descending order and each eigenvector has its first nonzero component
/// positive, so the output is a pure function of the input bits.
EigenDecomposition symmetric_eigen(const Matrix& a);

/// Q diag(values) Q^T, symmetrized.
Matrix reconstruct(const Matrix& eigenvectors, const Vector& values);

/// An n x n symmetric positive definite matrix. Immutable once built; the
/// constructor symmetrizes and checks that the smallest eigenvalue clears
/// kPdEpsilon (less a rounding allowance proportional to n * eps * |A|).
class SpdMatrix {
 public:
  /// Throws InvariantError when `a` is not square, not symmetric, or not
  /// positive definite, and ArgumentError when it is empty.
  explicit SpdMatrix(const Matrix& a);

  static SpdMatrix identity(Eigen::Index n);
  static SpdMatrix diagonal(const Vector& d);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  double min_eigenvalue() const;

  bool operator==(const SpdMatrix& other) const { return m_ == other.m_; }

 private:
  struct Trusted {};
  SpdMatrix(Matrix a, Trusted) : m_(std::move(a)) {}
  friend SpdMatrix retract(const SpdMatrix&, const Matrix&);
  friend SpdMatrix spd_inverse(const SpdMatrix&);

  Matrix m_;
};

/// tr(W W0^-1) - logdet(W W0^-1) - n, evaluated through the eigenvalues
/// mu_i of L^-1 W L^-T (W0 = L L^T) as sum(mu_i - ln mu_i - 1), which is
/// nonnegative term by term.
double logdet_divergence(const SpdMatrix& w, const SpdMatrix& w0);

/// d/dW of logdet_divergence(W, W0) = W0^-1 - W^-1 (no 1/2 factor).
Matrix logdet_divergence_gradient(const SpdMatrix& w, const SpdMatrix& w0);

/// Tangent projection at a full-rank SPD point: the symmetric part of `g`.
Matrix project_to_tangent(const Matrix& euclidean_grad, const SpdMatrix& w);

/// R_W(step): eigendecompose W + step and rebuild it with eigenvalues
/// clipped from below at kPdEpsilon (plus a rounding margin). When no
/// clipping is needed the symmetrized sum is returned unchanged.
SpdMatrix retract(const SpdMatrix& w, const Matrix& step);

SpdMatrix spd_inverse(const SpdMatrix& w);

}  // namespace rpd
