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

#include "rpd/rpdml.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "rpd/errors.hpp"
#include "rpd/eval.hpp"
#include "rpd/random.hpp"

namespace rpd {
namespace {

using Pair = std::pair<int, int>;

std::vector<Pair> sample_pairs(const std::vector<Pair>& all, int cap, std::mt19937_64& rng) {
  if (static_cast<int>(all.size()) <= cap) return all;
  std::vector<Pair> out;
  out.reserve(static_cast<std::size_t>(cap));
  // Selection sampling keeps the input order.
  std::sample(all.begin(), all.end(), std::back_inserter(out), cap, rng);
  return out;
}

Matrix difference_rows(const Matrix& features, const std::vector<Pair>& pairs) {
  Matrix out(static_cast<Eigen::Index>(pairs.size()), features.cols());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = features.row(pairs[k].first) - features.row(pairs[k].second);
  }
  return out;
}

Matrix inverse_of(const Matrix& w) {
  Eigen::LLT<Matrix> llt(w);
  if (llt.info() != Eigen::Success) throw NumericError("inverse: matrix is not positive definite");
  return symmetrize(llt.solve(Matrix::Identity(w.rows(), w.cols())));
}

Vector bounds_vector(const PairConstraints& pc) {
  Vector ul(pc.size());
  ul.head(pc.similar_count()).setConstant(pc.u);
  ul.tail(pc.dissimilar_count()).setConstant(pc.l);
  return ul;
}

void add_rank_one_terms(Matrix& acc, const Matrix& rows, const Vector& weights, double sign) {
  // Fixed row order keeps the sum reproducible.
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if (weights[i] == 0.0) continue;
    const Vector x = rows.row(i).transpose();
    acc.noalias() += (sign * weights[i]) * (x * x.transpose());
  }
}

}  // namespace

void PairConstraints::validate() const {
  if (similar_count() < 1) throw ConstraintError("PairConstraints: no similar pairs");
  if (dissimilar_count() < 1) throw ConstraintError("PairConstraints: no dissimilar pairs");
  if (similar_diffs.cols() != dissimilar_diffs.cols()) throw ConstraintError("PairConstraints: dimension mismatch");
  if (!(u > 0.0) || !(l > 0.0)) throw ConstraintError("PairConstraints: bounds u and l must be positive");
  if (!(u < l)) throw ConstraintError("PairConstraints: u must be smaller than l");
}

SlackState::SlackState(Vector xi) : xi_(std::move(xi)) {
  for (Eigen::Index i = 0; i < xi_.size(); ++i) {
    if (!std::isfinite(xi_[i]) || xi_[i] < 0.0) throw InvariantError("SlackState: negative or non-finite entry");
  }
}

void RpdmlConfig::validate() const {
  if (!(c1 > 0.0)) throw ConfigError("RpdmlConfig: c1 must be positive");
  if (!(c2 > 0.0)) throw ConfigError("RpdmlConfig: c2 must be positive");
  if (!(eta0 > 0.0)) throw ConfigError("RpdmlConfig: eta0 must be positive");
  if (c2 * eta0 > 1.0) throw ConfigError("RpdmlConfig: c2 * eta0 must not exceed 1");
  if (outer_iters < 0) throw ConfigError("RpdmlConfig: outer_iters must be nonnegative");
  if (!(inner_tolerance > 0.0) || inner_max_iters < 1) throw ConfigError("RpdmlConfig: bad inner solver limits");
  if (!(percentile_lo > 0.0 && percentile_lo < percentile_hi && percentile_hi < 100.0)) {
    throw ConfigError("RpdmlConfig: percentiles must satisfy 0 < lo < hi < 100");
  }
  if (max_pairs_per_class < 1) throw ConfigError("RpdmlConfig: max_pairs_per_class must be positive");
}

PairConstraints build_pairs(const Matrix& features, const std::vector<int>& labels, int max_pairs_per_class,
                            std::uint64_t seed) {
  const auto n = static_cast<int>(features.rows());
  if (static_cast<std::size_t>(n) != labels.size()) throw ArgumentError("build_pairs: label count != sample count");
  if (n < 2) throw ArgumentError("build_pairs: need at least two samples");
  if (max_pairs_per_class < 1) throw ArgumentError("build_pairs: max_pairs_per_class must be positive");

  std::vector<Pair> same;
  std::vector<Pair> diff;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? same : diff).emplace_back(i, j);
    }
  }
  if (diff.empty()) throw ConstraintError("build_pairs: need at least two distinct labels");
  if (same.empty()) throw ConstraintError("build_pairs: every label class has fewer than two samples");

  std::mt19937_64 rng(derive_seed(seed, stream::kPairSampling));
  PairConstraints pc;
  pc.similar_pairs = sample_pairs(same, max_pairs_per_class, rng);
  pc.dissimilar_pairs = sample_pairs(diff, max_pairs_per_class, rng);
  pc.similar_diffs = difference_rows(features, pc.similar_pairs);
  pc.dissimilar_diffs = difference_rows(features, pc.dissimilar_pairs);
  return pc;
}

std::size_t drop_zero_rows(PairConstraints& pc) {
  std::size_t dropped = 0;
  auto filter = [&dropped](Matrix& rows, std::vector<Pair>& pairs) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      if (rows.row(i).cwiseAbs().maxCoeff() > 0.0) keep.push_back(i);
    }
    if (keep.size() == static_cast<std::size_t>(rows.rows())) return;
    dropped += static_cast<std::size_t>(rows.rows()) - keep.size();
    Matrix kept(static_cast<Eigen::Index>(keep.size()), rows.cols());
    std::vector<Pair> kept_pairs;
    for (std::size_t k = 0; k < keep.size(); ++k) {
      kept.row(static_cast<Eigen::Index>(k)) = rows.row(keep[k]);
      kept_pairs.push_back(pairs[static_cast<std::size_t>(keep[k])]);
    }
    rows = std::move(kept);
    pairs = std::move(kept_pairs);
  };
  filter(pc.similar_diffs, pc.similar_pairs);
  filter(pc.dissimilar_diffs, pc.dissimilar_pairs);
  return dropped;
}

std::pair<double, double> compute_bounds(std::vector<double> distances, double p_lo, double p_hi) {
  if (distances.empty()) throw ArgumentError("compute_bounds: no distances");
  if (!(p_lo > 0.0 && p_lo < p_hi && p_hi < 100.0)) {
    throw ArgumentError("compute_bounds: percentiles must satisfy 0 < p_lo < p_hi < 100");
  }
  std::sort(distances.begin(), distances.end());
  const double n = static_cast<double>(distances.size());
  auto at_rank = [&](double p) {
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, distances.size());
    return distances[rank - 1];
  };
  const double u = at_rank(p_lo);
  const double l = at_rank(p_hi);
  if (!(u < l)) {
    throw BoundsError("compute_bounds: percentile bounds coincide (u = l = " + std::to_string(u) +
                      "); the distance distribution is degenerate, use more varied data");
  }
  return {u, l};
}

Vector row_quadratic_forms(const Matrix& rows, const Matrix& w) {
  if (rows.cols() != w.rows()) throw ArgumentError("row_quadratic_forms: dimension mismatch");
  Vector out(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const auto x = rows.row(i);
    out[i] = x.dot(w * x.transpose());
  }
  return out;
}

Vector eval_h(const SpdMatrix& w, const SlackState& xi, const PairConstraints& pc) {
  if (pc.dim() != w.dim() || pc.dissimilar_diffs.cols() != w.dim()) {
    throw ArgumentError("eval_h: metric and pair dimensions differ");
  }
  if (xi.size() != pc.size()) throw ArgumentError("eval_h: slack length differs from the constraint count");
  const Eigen::Index np = pc.similar_count();
  const Eigen::Index nm = pc.dissimilar_count();
  Vector h(np + nm);
  h.head(np) = row_quadratic_forms(pc.similar_diffs, w.matrix()) -
               pc.u * (Vector::Ones(np) + xi.values().head(np));
  h.tail(nm) = -row_quadratic_forms(pc.dissimilar_diffs, w.matrix()) +
               pc.l * (Vector::Ones(nm) - xi.values().tail(nm));
  return h;
}

Matrix grad_h_contraction(const DualVector& lambda, const PairConstraints& pc) {
  if (lambda.size() != pc.size()) throw ArgumentError("grad_h_contraction: multiplier length mismatch");
  const Eigen::Index d = pc.dim();
  Matrix acc = Matrix::Zero(d, d);
  add_rank_one_terms(acc, pc.similar_diffs, lambda.values().head(pc.similar_count()), 1.0);
  add_rank_one_terms(acc, pc.dissimilar_diffs, lambda.values().tail(pc.dissimilar_count()), -1.0);
  return symmetrize(acc);
}

WSubproblem::WSubproblem(const SpdMatrix& w0, const SpdMatrix& w_t, const Matrix& contraction, double eta,
                         ProxTermMode mode)
    : w0_(w0), w_t_(w_t), contraction_(contraction) {
  const Eigen::Index n = w0.dim();
  if (w_t.dim() != n || contraction.rows() != n || contraction.cols() != n) {
    throw ArgumentError("WSubproblem: dimension mismatch");
  }
  if (!(eta > 0.0)) throw ArgumentError("WSubproblem: eta must be positive");
  a_ = 0.5 * spd_inverse(w0).matrix() + contraction;
  c_ = 0.5;
  if (mode == ProxTermMode::kInclude) {
    prox_weight_ = 1.0 / (2.0 * eta);
    a_ += prox_weight_ * spd_inverse(w_t).matrix();
    c_ += prox_weight_;
  }
  a_ = symmetrize(a_);
}

double WSubproblem::value(const SpdMatrix& w) const {
  // <C, W - W_t> differs from <C, W> by a constant and stays small near W_t.
  double v = 0.5 * logdet_divergence(w, w0_) + contraction_.cwiseProduct(w.matrix() - w_t_.matrix()).sum();
  if (prox_weight_ > 0.0) v += prox_weight_ * logdet_divergence(w, w_t_);
  return v;
}

Matrix WSubproblem::gradient(const SpdMatrix& w) const { return symmetrize(a_ - c_ * inverse_of(w.matrix())); }

DescentResult inner_solve_w_detailed(const SpdMatrix& w_t, const DualVector& lambda, const SpdMatrix& w0, double eta,
                                     const PairConstraints& pc, const RpdmlConfig& config) {
  if (w_t.dim() != w0.dim() || pc.dim() != w0.dim()) throw ArgumentError("inner_solve_w: dimension mismatch");
  if (!(eta > 0.0)) throw ArgumentError("inner_solve_w: eta must be positive");
  const WSubproblem sub(w0, w_t, grad_h_contraction(lambda, pc), eta, config.prox_mode);
  DescentOptions opts;
  opts.initial_step = eta;
  opts.tolerance = config.inner_tolerance;
  opts.max_iters = config.inner_max_iters;
  opts.convex = true;
  return riemannian_descent([&sub](const SpdMatrix& w) { return sub.value(w); },
                            [&sub](const SpdMatrix& w) { return sub.gradient(w); }, w_t, opts);
}

SpdMatrix inner_solve_w(const SpdMatrix& w_t, const DualVector& lambda, const SpdMatrix& w0, double eta,
                        const PairConstraints& pc, const RpdmlConfig& config) {
  return inner_solve_w_detailed(w_t, lambda, w0, eta, pc, config).point;
}

SlackState update_slack(const SlackState& xi_t, const DualVector& lambda, const DualVector& gamma, double eta,
                        double c1, const PairConstraints& pc) {
  const Eigen::Index n = pc.size();
  if (xi_t.size() != n || lambda.size() != n || gamma.size() != n) {
    throw ArgumentError("update_slack: length mismatch");
  }
  if (!(c1 + eta > 0.0)) throw ArgumentError("update_slack: c1 + eta must be positive");
  const Vector weighted = lambda.values().cwiseProduct(bounds_vector(pc));
  const Vector next = (eta * xi_t.values() + gamma.values() + weighted) / (c1 + eta);
  return SlackState(positive_part(next));
}

DualVector update_lambda(const DualVector& lambda, const Vector& h_val, double eta, double c2) {
  return dual_ascent_step(lambda, h_val, eta, c2);
}

DualVector update_gamma(const DualVector& gamma, const SlackState& xi_next, double eta, double c2) {
  return dual_ascent_step(gamma, -xi_next.values(), eta, c2);
}

MetricLearningProblem::MetricLearningProblem(PairConstraints pc, SpdMatrix w0, RpdmlConfig config)
    : pc_(std::move(pc)), w0_(std::move(w0)), config_(config) {
  pc_.validate();
  if (pc_.dim() != w0_.dim()) throw ArgumentError("MetricLearningProblem: W0 and pair dimensions differ");
}

double MetricLearningProblem::objective(const MetricPoint& x) const {
  return 0.5 * logdet_divergence(x.w, w0_) + 0.5 * config_.c1 * x.xi.values().squaredNorm();
}

Vector MetricLearningProblem::constraints(const MetricPoint& x) const {
  Vector out(constraint_count());
  out.head(pc_.size()) = eval_h(x.w, x.xi, pc_);
  out.tail(pc_.size()) = -x.xi.values();
  return out;
}

double MetricLearningProblem::distance_sq(const MetricPoint& a, const MetricPoint& b) const {
  return logdet_divergence(a.w, b.w) + (a.xi.values() - b.xi.values()).squaredNorm();
}

std::pair<DualVector, DualVector> MetricLearningProblem::split(const DualVector& multipliers, Eigen::Index n) {
  if (multipliers.size() != 2 * n) throw ArgumentError("MetricLearningProblem: multiplier length mismatch");
  return {DualVector(multipliers.values().head(n)), DualVector(multipliers.values().tail(n))};
}

InnerResult<MetricPoint> MetricLearningProblem::prox_step(const MetricPoint& x_t, const DualVector& multipliers,
                                                          double eta, const InnerOptions& options) const {
  const auto [lambda, gamma] = split(multipliers, pc_.size());
  RpdmlConfig cfg = config_;
  cfg.inner_tolerance = options.tolerance;
  cfg.inner_max_iters = options.max_iters;
  DescentResult w_step = inner_solve_w_detailed(x_t.w, lambda, w0_, eta, pc_, cfg);
  SlackState xi = update_slack(x_t.xi, lambda, gamma, eta, config_.c1, pc_);
  return {MetricPoint{std::move(w_step.point), std::move(xi)}, w_step.iterations, w_step.converged};
}

MetricModel train(const Matrix& features, const std::vector<int>& labels, const RpdmlConfig& config) {
  config.validate();
  if (features.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw ArgumentError("train: label count != sample count");
  }
  if (!features.allFinite()) throw ArgumentError("train: non-finite features");

  const SpdMatrix w0 = config.w0_mode == ReferenceMetric::kIdentity ? SpdMatrix::identity(features.cols())
                                                                    : mahalanobis_metric(features);
  MetricModel model{w0, w0, 0.0, 0.0, {}, 0.0, {}, {}, {}};

  PairConstraints pc = build_pairs(features, labels, config.max_pairs_per_class, config.seed);
  if (const std::size_t dropped = drop_zero_rows(pc)) {
    model.warnings.push_back("dropped " + std::to_string(dropped) + " zero difference rows (duplicate samples)");
  }
  if (pc.similar_count() < 1 || pc.dissimilar_count() < 1) {
    throw ConstraintError("train: no usable pairs left after dropping duplicates");
  }

  std::vector<double> distances;
  distances.reserve(static_cast<std::size_t>(pc.size()));
  for (const Matrix* rows : {&pc.similar_diffs, &pc.dissimilar_diffs}) {
    const Vector q = row_quadratic_forms(*rows, w0.matrix());
    distances.insert(distances.end(), q.data(), q.data() + q.size());
  }
  std::tie(pc.u, pc.l) = compute_bounds(std::move(distances), config.percentile_lo, config.percentile_hi);
  model.u = pc.u;
  model.l = pc.l;
  model.initial_violation = violation_l1(eval_h(w0, SlackState::zeros(pc.size()), pc));

  const Eigen::Index n = pc.size();
  MetricLearningProblem problem(std::move(pc), w0, config);
  SolverConfig solver;
  solver.alpha = config.c2;
  solver.eta0 = config.eta0;
  solver.max_outer_iters = config.outer_iters;
  solver.inner_tolerance = config.inner_tolerance;
  solver.inner_max_iters = config.inner_max_iters;

  RunTrace<MetricPoint> trace = run(problem, MetricPoint{w0, SlackState::zeros(n)}, solver);
  model.w = trace.final_point.w;
  model.trace = std::move(trace.records);
  return model;
}

MetricProvider learned_metric_provider(const RpdmlConfig& config) {
  config.validate();
  return [config](const Matrix& features, const Vector& returns) {
    return train(features, labels_from_returns(returns), config).w;
  };
}

double metric_distance(const SpdMatrix& w, const Vector& a, const Vector& b) {
  if (a.size() != w.dim() || b.size() != w.dim()) throw ArgumentError("metric_distance: dimension mismatch");
  const Vector d = a - b;
  return std::max(0.0, d.dot(w.matrix() * d));
}

double metric_distance(const MetricModel& model, const Vector& a, const Vector& b) {
  return metric_distance(model.w, a, b);
}

namespace {

std::vector<double> row_major(const Matrix& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  }
  return out;
}

Matrix square_from(const std::vector<double>& data, Eigen::Index n, const char* key) {
  if (static_cast<std::size_t>(n * n) != data.size()) {
    throw IoError(std::string("model json: '") + key + "' length does not equal dim*dim");
  }
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = data[static_cast<std::size_t>(i * n + j)];
  }
  return m;
}

}  // namespace

std::string model_to_json(const MetricModel& model) {
  nlohmann::ordered_json j;
  j["dim"] = model.w.dim();
  j["w"] = row_major(model.w.matrix());
  j["w0"] = row_major(model.w0.matrix());
  j["u"] = model.u;
  j["l"] = model.l;
  if (model.feature_mean.size()) {
    j["feature_mean"] = std::vector<double>(model.feature_mean.data(), model.feature_mean.data() + model.feature_mean.size());
    j["feature_scale"] =
        std::vector<double>(model.feature_scale.data(), model.feature_scale.data() + model.feature_scale.size());
  }
  return j.dump(2);
}

MetricModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    const auto n = j.at("dim").get<Eigen::Index>();
    if (n <= 0) throw IoError("model json: dim must be positive");
    MetricModel model{SpdMatrix(square_from(j.at("w").get<std::vector<double>>(), n, "w")),
                      SpdMatrix(square_from(j.at("w0").get<std::vector<double>>(), n, "w0")),
                      j.at("u").get<double>(),
                      j.at("l").get<double>(),
                      {},
                      0.0,
                      {},
                      {},
                      {}};
    if (j.contains("feature_mean")) {
      const auto mean = j.at("feature_mean").get<std::vector<double>>();
      const auto scale = j.at("feature_scale").get<std::vector<double>>();
      if (mean.size() != static_cast<std::size_t>(n) || scale.size() != static_cast<std::size_t>(n)) {
        throw IoError("model json: feature statistics have the wrong length");
      }
      model.feature_mean = Eigen::Map<const Vector>(mean.data(), n);
      model.feature_scale = Eigen::Map<const Vector>(scale.data(), n);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("model json: ") + e.what());
  }
}

}  // namespace rpd
