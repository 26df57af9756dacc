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

// Metric learning with LogDet regularization and pairwise distance
// constraints, solved by the proximal primal-dual iteration.
//
//   min_{W SPD, xi >= 0}  1/2 d^2(W, W0) + C1/2 |xi|^2
//   s.t.  h+(W) = diag(X+ W X+^T) - u (1 + xi+) <= 0
//         h-(W) = -diag(X- W X-^T) + l (1 - xi-) <= 0
//
// Each outer step updates W (Riemannian gradient descent with the
// eigenvalue-clipping retraction), then xi (closed form), then the
// multipliers lambda (for h) and gamma (for -xi <= 0).

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rpd/descent.hpp"
#include "rpd/eval.hpp"
#include "rpd/solver.hpp"
#include "rpd/spd.hpp"

namespace rpd {

struct PairConstraints {
  Matrix similar_diffs;     // rows x_i - x_j, same label
  Matrix dissimilar_diffs;  // rows x_i - x_j, different labels
  std::vector<std::pair<int, int>> similar_pairs;
  std::vector<std::pair<int, int>> dissimilar_pairs;
  double u = 0.0;  // upper bound on similar-pair distances (0 = unset)
  double l = 0.0;  // lower bound on dissimilar-pair distances (0 = unset)

  Eigen::Index similar_count() const { return similar_diffs.rows(); }
  Eigen::Index dissimilar_count() const { return dissimilar_diffs.rows(); }
  Eigen::Index size() const { return similar_count() + dissimilar_count(); }
  Eigen::Index dim() const { return similar_diffs.cols(); }
  bool bounds_set() const { return u > 0.0 && l > 0.0; }

  /// Throws ConstraintError unless both sides are nonempty and 0 < u < l.
  void validate() const;
};

/// Nonnegative slack vector [xi+; xi-].
class SlackState {
 public:
  SlackState() = default;
  explicit SlackState(Vector xi);
  static SlackState zeros(Eigen::Index n) { return SlackState(Vector::Zero(n)); }

  const Vector& values() const { return xi_; }
  Eigen::Index size() const { return xi_.size(); }
  double min() const { return xi_.size() ? xi_.minCoeff() : 0.0; }

 private:
  Vector xi_;
};

enum class ProxTermMode { kInclude, kOmit };
enum class ReferenceMetric { kIdentity, kInverseCovariance };

struct RpdmlConfig {
  // Defaults suit raw features with squared pair distances in the tens to
  // hundreds; h is in those units, so eta0 stays small to keep the first
  // multiplier steps from swamping the LogDet term.
  double c1 = 100.0;  // slack penalty
  double c2 = 1.0;    // dual regularization
  double eta0 = 2e-4;
  int outer_iters = 200;
  double inner_tolerance = 1e-6;
  int inner_max_iters = 200;
  double percentile_lo = 5.0;
  double percentile_hi = 95.0;
  ProxTermMode prox_mode = ProxTermMode::kInclude;
  ReferenceMetric w0_mode = ReferenceMetric::kIdentity;
  int max_pairs_per_class = 1000;
  std::uint64_t seed = 0;

  /// Throws ConfigError unless c1 > 0, c2 > 0, c2 * eta0 <= 1 and the
  /// percentiles satisfy 0 < lo < hi < 100.
  void validate() const;
};

struct MetricPoint {
  SpdMatrix w;
  SlackState xi;
};

struct MetricModel {
  SpdMatrix w;
  SpdMatrix w0;
  double u = 0.0;
  double l = 0.0;
  std::vector<TraceRecord> trace;
  double initial_violation = 0.0;  // |[h(W0, 0)]_+|_1
  std::vector<std::string> warnings;
  // Feature standardization applied before training, empty if none.
  Vector feature_mean;
  Vector feature_scale;
};

/// Same-label and different-label difference rows. Each side keeps every
/// pair when it has at most max_pairs_per_class of them, otherwise a seeded
/// uniform sample of that size (in index order). Bounds are left unset.
PairConstraints build_pairs(const Matrix& features, const std::vector<int>& labels, int max_pairs_per_class,
                            std::uint64_t seed);

/// Removes all-zero difference rows (duplicate points); they only add the
/// vacuous constraints 0 <= u (1 + xi). Returns the number removed.
std::size_t drop_zero_rows(PairConstraints& pc);

/// Nearest-rank percentiles: u = sorted[ceil(p_lo/100 N) - 1],
/// l = sorted[ceil(p_hi/100 N) - 1]. Throws BoundsError if u == l.
std::pair<double, double> compute_bounds(std::vector<double> distances, double p_lo, double p_hi);

/// x^T W x for every row of X.
Vector row_quadratic_forms(const Matrix& rows, const Matrix& w);

/// [h+; h-] evaluated row by row.
Vector eval_h(const SpdMatrix& w, const SlackState& xi, const PairConstraints& pc);

/// sum_i lambda_i x_i x_i^T over similar rows minus the same over
/// dissimilar rows: the contraction <lambda, dh/dW>.
Matrix grad_h_contraction(const DualVector& lambda, const PairConstraints& pc);

/// Objective of the W step for fixed (lambda_t, W_t, eta_t):
///   J(W) = 1/2 d^2(W, W0) + <C, W> [+ d^2(W, W_t) / (2 eta)]
/// where C = grad_h_contraction(lambda), up to an additive constant (terms
/// of <lambda, h> free of W are dropped and <C, W> is taken relative to
/// W_t). Values go through the divergences themselves:
/// the expanded form tr(A W) - c logdet W cancels badly once c ~ 1/eta is
/// large, and the inner line search then cannot see its own progress.
class WSubproblem {
 public:
  WSubproblem(const SpdMatrix& w0, const SpdMatrix& w_t, const Matrix& contraction, double eta, ProxTermMode mode);

  double value(const SpdMatrix& w) const;
  /// Euclidean gradient 1/2 (W0^-1 - W^-1) + C [+ (W_t^-1 - W^-1) / (2 eta)],
  /// i.e. A - c W^-1.
  Matrix gradient(const SpdMatrix& w) const;

  const Matrix& linear_term() const { return a_; }
  double logdet_weight() const { return c_; }

 private:
  SpdMatrix w0_;
  SpdMatrix w_t_;
  Matrix contraction_;
  double prox_weight_ = 0.0;  // 1/(2 eta), or 0 when the prox term is omitted
  Matrix a_;
  double c_ = 0.5;
};

/// Minimizes the W step by Riemannian gradient descent started at W_t.
DescentResult inner_solve_w_detailed(const SpdMatrix& w_t, const DualVector& lambda, const SpdMatrix& w0, double eta,
                                     const PairConstraints& pc, const RpdmlConfig& config);
SpdMatrix inner_solve_w(const SpdMatrix& w_t, const DualVector& lambda, const SpdMatrix& w0, double eta,
                        const PairConstraints& pc, const RpdmlConfig& config);

/// xi <- [(eta xi_t + gamma + lambda .* (u; l)) / (C1 + eta)]_+
SlackState update_slack(const SlackState& xi_t, const DualVector& lambda, const DualVector& gamma, double eta,
                        double c1, const PairConstraints& pc);

/// lambda <- [(1 - C2 eta) lambda + eta h]_+
DualVector update_lambda(const DualVector& lambda, const Vector& h_val, double eta, double c2);

/// gamma <- [(1 - C2 eta) gamma - eta xi]_+
DualVector update_gamma(const DualVector& gamma, const SlackState& xi_next, double eta, double c2);

/// The metric-learning problem in the generic saddle-point form: points
/// are (W, xi), the constraint vector is [h(W, xi); -xi] and the
/// multiplier vector is [lambda; gamma].
class MetricLearningProblem final : public SaddleProblem<MetricPoint> {
 public:
  MetricLearningProblem(PairConstraints pc, SpdMatrix w0, RpdmlConfig config);

  Eigen::Index constraint_count() const override { return 2 * pc_.size(); }
  double objective(const MetricPoint& x) const override;
  Vector constraints(const MetricPoint& x) const override;
  double distance_sq(const MetricPoint& a, const MetricPoint& b) const override;
  bool symmetric_distance() const override { return false; }
  InnerResult<MetricPoint> prox_step(const MetricPoint& x_t, const DualVector& multipliers, double eta,
                                     const InnerOptions& options) const override;
  std::optional<double> slack_min(const MetricPoint& x) const override { return x.xi.min(); }

  const PairConstraints& pairs() const { return pc_; }
  const SpdMatrix& reference() const { return w0_; }

  static std::pair<DualVector, DualVector> split(const DualVector& multipliers, Eigen::Index n);

 private:
  PairConstraints pc_;
  SpdMatrix w0_;
  RpdmlConfig config_;
};

/// Runs the full update cycle for config.outer_iters steps and returns the
/// last iterate's metric. W0 follows config.w0_mode, u and l are the
/// configured percentiles of the constraint-pair distances under W0, and
/// xi, lambda, gamma all start at zero.
MetricModel train(const Matrix& features, const std::vector<int>& labels, const RpdmlConfig& config);

/// Metric provider for the backtest: labels each training window with
/// labels_from_returns and trains on it.
MetricProvider learned_metric_provider(const RpdmlConfig& config);

double metric_distance(const SpdMatrix& w, const Vector& a, const Vector& b);
double metric_distance(const MetricModel& model, const Vector& a, const Vector& b);

/// {"dim", "w", "w0", "u", "l"} plus optional "feature_mean"/"feature_scale".
std::string model_to_json(const MetricModel& model);
MetricModel model_from_json(const std::string& text);

}  // namespace rpd
