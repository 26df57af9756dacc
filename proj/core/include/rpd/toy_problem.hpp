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

#include "rpd/solver.hpp"

namespace rpd {

/// One-dimensional SPD test problem
///
///   min (x - target)^2   s.t.  x - upper <= 0,  x > 0
///
/// with the LogDet divergence x/y - ln(x/y) - 1 as the proximal distance.
/// With target > upper the constraint is active and the optimum is
/// x* = upper, f* = (upper - target)^2.
class ScalarSpdProblem final : public SaddleProblem<SpdMatrix> {
 public:
  enum class InnerMethod { kClosedForm, kRiemannianDescent };

  ScalarSpdProblem(double target = 2.0, double upper = 1.0, InnerMethod method = InnerMethod::kClosedForm);

  Eigen::Index constraint_count() const override { return 1; }
  double objective(const SpdMatrix& x) const override;
  Vector constraints(const SpdMatrix& x) const override;
  double distance_sq(const SpdMatrix& a, const SpdMatrix& b) const override;
  bool symmetric_distance() const override { return false; }

  /// Closed form: the stationarity condition
  ///   2 (x - target) + lambda + (1/x_t - 1/x) / (2 eta) = 0
  /// becomes 2x^2 + b x - 1/(2 eta) = 0 after multiplying by x, which has
  /// exactly one positive root.
  InnerResult<SpdMatrix> prox_step(const SpdMatrix& x_t, const DualVector& lambda, double eta,
                                   const InnerOptions& options) const override;

  /// The prox objective minimized by prox_step (for oracles and tests).
  double prox_objective(double x, double x_t, double lambda, double eta) const;

  double target() const { return target_; }
  double upper() const { return upper_; }

  static SpdMatrix point(double x);
  static double value(const SpdMatrix& x) { return x(0, 0); }

 private:
  double target_;
  double upper_;
  InnerMethod method_;
};

}  // namespace rpd
