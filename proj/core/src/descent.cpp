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

#include "rpd/descent.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rpd/errors.hpp"

namespace rpd {

DescentResult riemannian_descent(const SpdObjective& objective, const SpdGradient& euclidean_gradient,
                                 const SpdMatrix& start, const DescentOptions& options) {
  if (!(options.initial_step > 0.0)) throw ArgumentError("riemannian_descent: initial_step must be positive");
  if (options.max_iters < 0) throw ArgumentError("riemannian_descent: max_iters must be nonnegative");
  if (!(options.growth >= 1.0) || !(options.max_step >= options.initial_step)) {
    throw ArgumentError("riemannian_descent: need growth >= 1 and max_step >= initial_step");
  }

  DescentResult result{start, 0, false, 0.0, {}};
  double j = objective(start);
  if (!std::isfinite(j)) throw InnerSolveError("riemannian_descent: objective is not finite at the start point");
  result.objective_history.push_back(j);

  double trial = options.initial_step;
  for (;;) {
    const Matrix grad = project_to_tangent(euclidean_gradient(result.point), result.point);
    const double gnorm = grad.norm();
    result.gradient_norm = gnorm;
    if (!std::isfinite(gnorm)) throw InnerSolveError("riemannian_descent: non-finite gradient");
    if (gnorm <= options.tolerance) {
      result.converged = true;
      return result;
    }
    if (result.iterations >= options.max_iters) return result;

    const double slope = gnorm * gnorm;
    // Backtrack from the step carried over from the last iteration; if that
    // fails and it had shrunk below initial_step, start once more from there.
    double step = trial;
    bool accepted = false;
    for (int pass = 0; pass < 2 && !accepted; ++pass) {
      if (pass == 1) {
        if (trial >= options.initial_step) break;
        step = options.initial_step;
      }
      for (int k = 0; k <= options.max_halvings; ++k, step *= 0.5) {
        SpdMatrix candidate = retract(result.point, -step * grad);
        const double jt = objective(candidate);
        // The strict test keeps steps too small to change J in floating
        // point from counting as progress.
        bool ok = std::isfinite(jt) && jt < j && jt <= j - options.armijo * step * slope;
        if (!ok && options.convex && std::isfinite(jt) &&
            candidate.matrix() == symmetrize(result.point.matrix() - step * grad)) {
          const Matrix gt = euclidean_gradient(candidate);
          ok = gt.allFinite() && gt.cwiseProduct(grad).sum() >= options.armijo * slope;
        }
        if (ok) {
          result.point = std::move(candidate);
          j = jt;
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      if (gnorm > 1e-4 * (1.0 + std::abs(j))) {
        throw InnerSolveError("riemannian_descent: backtracking exhausted without decreasing the objective (J=" +
                              std::to_string(j) + ", |grad|=" + std::to_string(gnorm) + ")");
      }
      return result;
    }
    trial = std::min(options.max_step, options.growth * step);
    ++result.iterations;
    result.objective_history.push_back(j);
  }
}

}  // namespace rpd
