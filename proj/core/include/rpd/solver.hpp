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

// Proximal primal-dual iteration for  min f(x)  s.t.  h(x) <= 0  over a
// manifold. Each outer step solves the proximal subproblem
//
//   x_{t+1} = argmin_x  f(x) + <lambda_t, h(x)> + d^2(x, x_t) / (2 eta_t)
//
// and then takes a projected ascent step on the regularized Lagrangian
//
//   L(x, lambda) = f(x) + <lambda, h(x)> - (alpha / 2) |lambda|^2,
//   lambda_{t+1} = [lambda_t + eta_t (h(x_{t+1}) - alpha lambda_t)]_+ .
//
// The problem supplies f, h, the squared distance and the proximal
// minimizer; run() owns the schedule, the dual variable and the trace.

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rpd/errors.hpp"
#include "rpd/spd.hpp"

namespace rpd {

/// Nonnegative multiplier vector. Construction rejects negative or
/// non-finite entries.
class DualVector {
 public:
  DualVector() = default;
  explicit DualVector(Vector values);

  static DualVector zeros(Eigen::Index m) { return DualVector(Vector::Zero(m)); }

  const Vector& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_[i]; }
  double norm() const { return values_.norm(); }
  /// Smallest entry, 0 for an empty vector.
  double min() const { return values_.size() ? values_.minCoeff() : 0.0; }

 private:
  Vector values_;
};

struct SolverConfig {
  double alpha = 1e-3;            // dual regularization
  double eta0 = 1.0;              // eta_t = eta0 / sqrt(t + 1)
  int max_outer_iters = 500;      // T
  double inner_tolerance = 1e-6;  // gradient Frobenius norm
  int inner_max_iters = 200;
  double feasibility_tolerance = 1e-9;

  /// Throws ConfigError unless alpha > 0, eta0 > 0, alpha * eta0 <= 1 and
  /// the iteration limits are sane. eta_t is decreasing, so checking eta0
  /// covers every t.
  void validate() const;
};

struct InnerOptions {
  double tolerance = 1e-6;
  int max_iters = 200;
};

template <class Point>
struct InnerResult {
  Point point;
  int iterations = 0;
  bool converged = true;
};

struct TraceRecord {
  int t = 0;
  double eta = 0.0;
  double objective = 0.0;   // f(x_{t+1})
  double violation = 0.0;   // |[h(x_{t+1})]_+|_1
  double h_max_abs = 0.0;   // |h(x_{t+1})|_inf
  double dual_norm = 0.0;   // |lambda_t|
  double dual_min = 0.0;    // min entry of every multiplier after the update
  int inner_iterations = 0;
  bool inner_converged = true;
  std::optional<double> slack_min;
};

template <class Point>
struct RunTrace {
  std::vector<TraceRecord> records;
  std::vector<Point> iterates;  // iterates[t] = x_{t+1}
  Point final_point;
  DualVector final_dual;
  std::optional<std::size_t> best_index;
  Point best_point;
};

/// Inner minimizer failure or non-finite iterate. Carries the records
/// completed before the failure.
class DivergedError : public NumericError {
 public:
  DivergedError(const std::string& what, std::vector<TraceRecord> partial)
      : NumericError(what), partial_(std::move(partial)) {}
  const std::vector<TraceRecord>& partial_trace() const { return partial_; }

 private:
  std::vector<TraceRecord> partial_;
};

template <class Point>
class SaddleProblem {
 public:
  virtual ~SaddleProblem() = default;

  virtual Eigen::Index constraint_count() const = 0;
  virtual double objective(const Point& x) const = 0;
  virtual Vector constraints(const Point& x) const = 0;
  virtual double distance_sq(const Point& a, const Point& b) const = 0;

  /// argmin_x L(x, lambda) + distance_sq(x, x_t) / (2 eta).
  virtual InnerResult<Point> prox_step(const Point& x_t, const DualVector& lambda, double eta,
                                       const InnerOptions& options) const = 0;

  /// LogDet-type distances are not symmetric; validate_problem skips the
  /// symmetry probe for them.
  virtual bool symmetric_distance() const { return true; }

  virtual std::optional<double> slack_min(const Point&) const { return std::nullopt; }
};

/// eta0 / sqrt(t + 1).
double step_size(int t, double eta0);

Vector positive_part(const Vector& v);

/// [(1 - eta alpha) lambda + eta h]_+ . Throws ConfigError when alpha * eta > 1.
DualVector dual_ascent_step(const DualVector& lambda, const Vector& h_val, double eta, double alpha);

double violation_l1(const Vector& h);

template <class Point>
double lagrangian(const SaddleProblem<Point>& problem, const Point& x, const DualVector& lambda, double alpha) {
  const Vector h = problem.constraints(x);
  if (h.size() != lambda.size()) throw ArgumentError("lagrangian: dual length does not match constraint count");
  return problem.objective(x) + lambda.values().dot(h) - 0.5 * alpha * lambda.values().squaredNorm();
}

/// Index of the reported solution among records[0, count): lowest objective
/// among feasible iterates, or among the least-violating ones when none is
/// feasible; ties go to smaller violation, then smaller t.
std::optional<std::size_t> select_best(std::span<const TraceRecord> records, double feasibility_tolerance,
                                       std::size_t count = std::numeric_limits<std::size_t>::max());

/// Probes the problem at the given points: constraint length equals
/// constraint_count(), distance_sq(x, x) == 0, distance nonnegative and,
/// when symmetric_distance(), symmetric within 1e-9.
template <class Point>
void validate_problem(const SaddleProblem<Point>& problem, std::span<const Point> probes) {
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const Point& x = probes[i];
    if (problem.constraints(x).size() != problem.constraint_count()) {
      throw InvariantError("SaddleProblem: constraints() length differs from constraint_count()");
    }
    if (std::abs(problem.distance_sq(x, x)) > 1e-9) {
      throw InvariantError("SaddleProblem: distance_sq(x, x) is not zero");
    }
    for (std::size_t j = i + 1; j < probes.size(); ++j) {
      const double ab = problem.distance_sq(x, probes[j]);
      const double ba = problem.distance_sq(probes[j], x);
      if (ab < 0.0 || ba < 0.0) throw InvariantError("SaddleProblem: negative distance_sq");
      if (problem.symmetric_distance() && std::abs(ab - ba) > 1e-9) {
        throw InvariantError("SaddleProblem: distance_sq is not symmetric");
      }
    }
  }
}

/// Runs max_outer_iters proximal primal-dual iterations from x0 with
/// lambda_0 = 0.
template <class Point>
RunTrace<Point> run(const SaddleProblem<Point>& problem, const Point& x0, const SolverConfig& config) {
  config.validate();
  const Eigen::Index m = problem.constraint_count();
  const InnerOptions inner{config.inner_tolerance, config.inner_max_iters};

  std::vector<TraceRecord> records;
  std::vector<Point> iterates;
  records.reserve(static_cast<std::size_t>(config.max_outer_iters));
  iterates.reserve(static_cast<std::size_t>(config.max_outer_iters));

  Point x = x0;
  DualVector lambda = DualVector::zeros(m);

  for (int t = 0; t < config.max_outer_iters; ++t) {
    const double eta = step_size(t, config.eta0);
    InnerResult<Point> step{x, 0, true};
    try {
      step = problem.prox_step(x, lambda, eta, inner);
    } catch (const NumericError& e) {
      throw DivergedError("inner minimizer failed at t=" + std::to_string(t) + ": " + e.what(), records);
    }
    const double f = problem.objective(step.point);
    const Vector h = problem.constraints(step.point);
    if (h.size() != m) throw InvariantError("SaddleProblem: constraints() length differs from constraint_count()");
    if (!std::isfinite(f) || !h.allFinite()) {
      throw DivergedError("non-finite objective or constraint at t=" + std::to_string(t), records);
    }
    DualVector next = dual_ascent_step(lambda, h, eta, config.alpha);

    TraceRecord rec;
    rec.t = t;
    rec.eta = eta;
    rec.objective = f;
    rec.violation = violation_l1(h);
    rec.h_max_abs = m ? h.cwiseAbs().maxCoeff() : 0.0;
    rec.dual_norm = lambda.norm();
    rec.dual_min = next.min();
    rec.inner_iterations = step.iterations;
    rec.inner_converged = step.converged;
    rec.slack_min = problem.slack_min(step.point);
    records.push_back(rec);

    x = step.point;
    iterates.push_back(x);
    lambda = std::move(next);
  }

  const auto best = select_best(records, config.feasibility_tolerance);
  Point best_point = best ? iterates[*best] : x0;
  return RunTrace<Point>{std::move(records), std::move(iterates), std::move(x), std::move(lambda), best,
                         std::move(best_point)};
}

struct BoundParams {
  double d0_sq = 0.0;  // d^2(x*, x0) or an upper estimate
  double G = 0.0;      // bound on |h_k|
  int m = 0;           // number of constraints
  double R = 0.0;      // diameter estimate
  double C = 0.0;      // gradient bound; recorded only
};

/// (1 / sum eta) * (d0_sq / 2 + 2 m G^2 sum eta^2).
double theorem1_bound(const BoundParams& params, std::span<const double> etas);

struct StepSumBounds {
  double sum_lower;     // 2 (sqrt(T) - 1) <= sum_{t<T} 1/sqrt(t+1)
  double sq_sum_upper;  // sum_{t<T} 1/(t+1) <= 1 + ln T
};

StepSumBounds corollary1_sums(long long T);

/// Closed-form rate envelope for eta_t = 1/sqrt(t+1):
/// (R^2 / 2 + 2 m G^2 (1 + ln T)) / (2 (sqrt(T) - 1)). Requires T >= 2.
double corollary1_bound(const BoundParams& params, long long T);

std::vector<double> step_sizes(int count, double eta0);

struct BoundCheck {
  int T = 0;
  double gap = 0.0;    // min_{t<T} f(x_{t+1}) - f*
  double bound = 0.0;  // theorem1_bound with trace-estimated constants
  double d0_sq = 0.0;
  double G = 0.0;
  bool holds = false;
};

/// Empirical check of the primal-gap bound after every prefix of the trace.
/// d0_sq is measured as distance_sq(best_T, x0), with best_T the reported
/// solution of the prefix; G is max |h|_inf over the prefix, plus
/// alpha * max |lambda_t| when include_dual_term is set.
template <class Point>
std::vector<BoundCheck> empirical_bound_checks(const SaddleProblem<Point>& problem, const RunTrace<Point>& trace,
                                               const Point& x0, double f_star, const SolverConfig& config,
                                               bool include_dual_term = false) {
  std::vector<BoundCheck> out;
  const auto& recs = trace.records;
  out.reserve(recs.size());
  double min_f = std::numeric_limits<double>::infinity();
  double max_h = 0.0;
  double max_dual = 0.0;
  double sum_eta = 0.0;
  double sum_eta_sq = 0.0;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    min_f = std::min(min_f, recs[k].objective);
    max_h = std::max(max_h, recs[k].h_max_abs);
    max_dual = std::max(max_dual, recs[k].dual_norm);
    sum_eta += recs[k].eta;
    sum_eta_sq += recs[k].eta * recs[k].eta;

    const auto best = select_best(recs, config.feasibility_tolerance, k + 1);
    BoundCheck c;
    c.T = static_cast<int>(k + 1);
    c.gap = min_f - f_star;
    c.d0_sq = problem.distance_sq(trace.iterates[*best], x0);
    c.G = max_h + (include_dual_term ? config.alpha * max_dual : 0.0);
    c.bound = (0.5 * c.d0_sq + 2.0 * static_cast<double>(problem.constraint_count()) * c.G * c.G * sum_eta_sq) /
              sum_eta;
    c.holds = c.gap <= c.bound;
    out.push_back(c);
  }
  return out;
}

/// One JSON object per line with keys t, eta, f, h_violation, dual_norm,
/// dual_min, inner_iters (and slack_min when present).
std::string trace_record_json(const TraceRecord& record);
void write_trace_jsonl(std::ostream& out, std::span<const TraceRecord> records);

}  // namespace rpd
