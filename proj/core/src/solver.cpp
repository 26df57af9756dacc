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

#include "rpd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

namespace rpd {

DualVector::DualVector(Vector values) : values_(std::move(values)) {
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
      throw InvariantError("DualVector: entry " + std::to_string(i) + " is negative or non-finite");
    }
  }
}

void SolverConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("SolverConfig: alpha must be positive");
  if (!(eta0 > 0.0)) throw ConfigError("SolverConfig: eta0 must be positive");
  if (alpha * eta0 > 1.0) throw ConfigError("SolverConfig: alpha * eta0 must not exceed 1");
  if (max_outer_iters < 0) throw ConfigError("SolverConfig: max_outer_iters must be nonnegative");
  if (!(inner_tolerance > 0.0)) throw ConfigError("SolverConfig: inner_tolerance must be positive");
  if (inner_max_iters < 1) throw ConfigError("SolverConfig: inner_max_iters must be at least 1");
  if (feasibility_tolerance < 0.0) throw ConfigError("SolverConfig: feasibility_tolerance must be nonnegative");
}

double step_size(int t, double eta0) {
  if (t < 0) throw ArgumentError("step_size: t must be nonnegative");
  if (!(eta0 > 0.0)) throw ArgumentError("step_size: eta0 must be positive");
  return eta0 / std::sqrt(static_cast<double>(t) + 1.0);
}

std::vector<double> step_sizes(int count, double eta0) {
  std::vector<double> etas;
  etas.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int t = 0; t < count; ++t) etas.push_back(step_size(t, eta0));
  return etas;
}

Vector positive_part(const Vector& v) { return v.cwiseMax(0.0); }

double violation_l1(const Vector& h) { return positive_part(h).sum(); }

DualVector dual_ascent_step(const DualVector& lambda, const Vector& h_val, double eta, double alpha) {
  if (lambda.size() != h_val.size()) throw ArgumentError("dual_ascent_step: length mismatch");
  if (!(eta > 0.0)) throw ArgumentError("dual_ascent_step: eta must be positive");
  if (alpha * eta > 1.0) throw ConfigError("dual_ascent_step: alpha * eta exceeds 1");
  Vector next = (1.0 - eta * alpha) * lambda.values() + eta * h_val;
  return DualVector(positive_part(next));
}

std::optional<std::size_t> select_best(std::span<const TraceRecord> records, double feasibility_tolerance,
                                       std::size_t count) {
  const std::size_t n = std::min(count, records.size());
  if (n == 0) return std::nullopt;
  double least = records[0].violation;
  for (std::size_t i = 1; i < n; ++i) least = std::min(least, records[i].violation);
  const double admit = least <= feasibility_tolerance ? feasibility_tolerance : least + feasibility_tolerance;

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < n; ++i) {
    const TraceRecord& r = records[i];
    if (r.violation > admit) continue;
    if (!best) {
      best = i;
      continue;
    }
    const TraceRecord& b = records[*best];
    if (r.objective < b.objective || (r.objective == b.objective && r.violation < b.violation)) best = i;
  }
  return best;
}

double theorem1_bound(const BoundParams& params, std::span<const double> etas) {
  if (etas.empty()) throw ArgumentError("theorem1_bound: empty step-size sequence");
  if (params.d0_sq < 0.0 || params.G < 0.0 || params.m < 0 || params.R < 0.0 || params.C < 0.0) {
    throw ArgumentError("theorem1_bound: bound parameters must be nonnegative");
  }
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double e : etas) {
    if (!(e > 0.0)) throw ArgumentError("theorem1_bound: step sizes must be positive");
    sum += e;
    sum_sq += e * e;
  }
  return (0.5 * params.d0_sq + 2.0 * params.m * params.G * params.G * sum_sq) / sum;
}

StepSumBounds corollary1_sums(long long T) {
  if (T < 1) throw ArgumentError("corollary1_sums: T must be at least 1");
  const double t = static_cast<double>(T);
  return {2.0 * (std::sqrt(t) - 1.0), 1.0 + std::log(t)};
}

double corollary1_bound(const BoundParams& params, long long T) {
  if (T < 2) throw ArgumentError("corollary1_bound: T must be at least 2");
  const auto sums = corollary1_sums(T);
  return (0.5 * params.R * params.R + 2.0 * params.m * params.G * params.G * sums.sq_sum_upper) / sums.sum_lower;
}

std::string trace_record_json(const TraceRecord& r) {
  nlohmann::ordered_json j;
  j["t"] = r.t;
  j["eta"] = r.eta;
  j["f"] = r.objective;
  j["h_violation"] = r.violation;
  j["dual_norm"] = r.dual_norm;
  j["dual_min"] = r.dual_min;
  j["inner_iters"] = r.inner_iterations;
  if (r.slack_min) j["slack_min"] = *r.slack_min;
  return j.dump();
}

void write_trace_jsonl(std::ostream& out, std::span<const TraceRecord> records) {
  for (const auto& r : records) out << trace_record_json(r) << '\n';
}

}  // namespace rpd
