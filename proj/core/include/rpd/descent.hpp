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

#include <functional>
#include <vector>

#include "rpd/spd.hpp"

namespace rpd {

struct DescentOptions {
  double initial_step = 1.0;
  double max_step = 1e6;      // cap on the trial step after growth
  double growth = 2.0;        // trial step multiplier after an accepted step
  double tolerance = 1e-6;   // stop when |Grad|_F <= tolerance
  int max_iters = 200;
  double armijo = 1e-4;
  int max_halvings = 60;
  // J is convex along straight lines in the ambient space. Enables a second
  // acceptance test that uses the gradient at the candidate instead of J.
  bool convex = false;
};

struct DescentResult {
  SpdMatrix point;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::vector<double> objective_history;  // J at the start point and after each accepted step
};

using SpdObjective = std::function<double(const SpdMatrix&)>;
using SpdGradient = std::function<Matrix(const SpdMatrix&)>;

/// Riemannian gradient descent on the SPD manifold:
///   W <- R_W(-s * P_W(grad J(W)))
/// with backtracking on s (Armijo condition). The first trial is
/// initial_step; each later iteration starts from growth times the last
/// accepted step, capped at max_step, and halves from there.
///
/// Accepted steps never increase J. If backtracking runs out while the
/// gradient is still large relative to |J| the objective cannot be
/// decreased along the descent direction, which means the supplied
/// gradient is inconsistent with J: that throws InnerSolveError. Running
/// out with a small gradient is treated as reaching floating-point
/// resolution and ends the loop unconverged.
///
/// With options.convex set, a candidate the retraction did not clip is also
/// accepted when <grad J(candidate), g> >= armijo * |g|^2, where g is the
/// search direction. Convexity gives J(candidate) <= J - armijo * s * |g|^2,
/// so this certifies the Armijo decrease once J differences are below
/// rounding. Recorded J values may then rise by rounding noise.
DescentResult riemannian_descent(const SpdObjective& objective, const SpdGradient& euclidean_gradient,
                                 const SpdMatrix& start, const DescentOptions& options);

}  // namespace rpd
