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

#include "rpd/toy_problem.hpp"

#include <algorithm>
#include <cmath>

#include "rpd/descent.hpp"

namespace rpd {

ScalarSpdProblem::ScalarSpdProblem(double target, double upper, InnerMethod method)
    : target_(target), upper_(upper), method_(method) {
  if (!(upper > 0.0)) throw ArgumentError("ScalarSpdProblem: upper bound must be positive");
}

SpdMatrix ScalarSpdProblem::point(double x) { return SpdMatrix(Matrix::Constant(1, 1, x)); }

double ScalarSpdProblem::objective(const SpdMatrix& x) const {
  const double d = value(x) - target_;
  return d * d;
}

Vector ScalarSpdProblem::constraints(const SpdMatrix& x) const { return Vector::Constant(1, value(x) - upper_); }

double ScalarSpdProblem::distance_sq(const SpdMatrix& a, const SpdMatrix& b) const { return logdet_divergence(a, b); }

double ScalarSpdProblem::prox_objective(double x, double x_t, double lambda, double eta) const {
  const double r = x / x_t;
  return (x - target_) * (x - target_) + lambda * (x - upper_) + (r - std::log(r) - 1.0) / (2.0 * eta);
}

InnerResult<SpdMatrix> ScalarSpdProblem::prox_step(const SpdMatrix& x_t, const DualVector& lambda, double eta,
                                                   const InnerOptions& options) const {
  if (lambda.size() != 1) throw ArgumentError("ScalarSpdProblem: expected one multiplier");
  const double xt = value(x_t);
  const double lam = lambda[0];

  if (method_ == InnerMethod::kClosedForm) {
    const double c = 1.0 / (2.0 * eta);
    const double b = lam - 2.0 * target_ + c / xt;
    const double s = std::sqrt(b * b + 8.0 * c);
    // Both forms give the positive root; pick the one without cancellation.
    double x = b > 0.0 ? 2.0 * c / (s + b) : (s - b) / 4.0;
    x = std::max(x, kPdEpsilon);
    return {point(x), 1, true};
  }

  const SpdMatrix anchor = x_t;
  auto objective = [&](const SpdMatrix& w) { return prox_objective(value(w), xt, lam, eta); };
  auto gradient = [&](const SpdMatrix& w) {
    const double x = value(w);
    return Matrix::Constant(1, 1, 2.0 * (x - target_) + lam + (1.0 / xt - 1.0 / x) / (2.0 * eta));
  };
  DescentOptions opts;
  opts.initial_step = eta;
  opts.tolerance = options.tolerance;
  opts.max_iters = options.max_iters;
  opts.convex = true;
  DescentResult r = riemannian_descent(objective, gradient, anchor, opts);
  return {std::move(r.point), r.iterations, r.converged};
}

}  // namespace rpd
