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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rpd/data.hpp"
#include "rpd/eval.hpp"
#include "rpd/random.hpp"
#include "rpd/rpdml.hpp"
#include "rpd/solver.hpp"
#include "rpd/spd.hpp"
#include "rpd/toy_problem.hpp"

#ifdef RPD_HAVE_CLI
#include "cli.hpp"
#endif

namespace rpd {
namespace {

using testing::finite_difference_gradient;
using testing::grid_search;
using testing::max_relative_error;
using testing::random_spd;
using testing::random_symmetric;

// Tolerances and limits.
constexpr double kGradTol = 1e-5;
constexpr double kSymmetryTol = 1e-10;
constexpr double kScaleTol = 1e-10;
constexpr double kToyTol = 1e-2;
constexpr double kEnvelopeFactor = 3.0;
constexpr double kMinAccuracyGain = 0.10;
constexpr double kMaxViolationRatio = 0.5;
constexpr int kMinIcWindows = 8;
constexpr double kArithmeticTol = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

// Minimum entries over every recorded multiplier and slack vector.
struct FeasibilityLog {
  double dual_min = std::numeric_limits<double>::infinity();
  double slack_min = std::numeric_limits<double>::infinity();
  long long records = 0;

  void add(const std::vector<TraceRecord>& trace) {
    for (const auto& r : trace) {
      dual_min = std::min(dual_min, r.dual_min);
      if (r.slack_min) slack_min = std::min(slack_min, *r.slack_min);
      ++records;
    }
  }
};

FeasibilityLog g_feasibility;

double toy_f_star(const ScalarSpdProblem& p) {
  return grid_search([&](double v) { return p.objective(ScalarSpdProblem::point(v)); },
                     [&](double v) { return p.constraints(ScalarSpdProblem::point(v))[0] <= 0.0; }, 1e-4, 3.0, 1e-4)
      .second;
}

RunTrace<SpdMatrix> toy_run(const ScalarSpdProblem& p, int T) {
  SolverConfig cfg;
  cfg.max_outer_iters = T;
  auto trace = run<SpdMatrix>(p, ScalarSpdProblem::point(0.5), cfg);
  g_feasibility.add(trace.records);
  return trace;
}

Outcome criterion1() {
  double worst = 0.0;
  int instances = 0;
  for (int dim : {3, 5}) {
    std::mt19937_64 rng(1000 + dim);
    std::uniform_real_distribution<double> eta_dist(0.05, 2.0);
    std::uniform_real_distribution<double> lam_dist(0.0, 1.0);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 20; ++trial) {
      const SpdMatrix w0(random_spd(rng, dim));
      const SpdMatrix wt(random_spd(rng, dim));
      PairConstraints pc;
      pc.similar_diffs.resize(3, dim);
      pc.dissimilar_diffs.resize(3, dim);
      for (Eigen::Index i = 0; i < pc.similar_diffs.size(); ++i) pc.similar_diffs.data()[i] = normal(rng);
      for (Eigen::Index i = 0; i < pc.dissimilar_diffs.size(); ++i) pc.dissimilar_diffs.data()[i] = normal(rng);
      Vector lam(pc.size());
      for (Eigen::Index i = 0; i < lam.size(); ++i) lam[i] = lam_dist(rng);
      const Matrix contraction = grad_h_contraction(DualVector(lam), pc);
      const double eta = eta_dist(rng);
      const Matrix w = random_spd(rng, dim, 0.5, 3.0);
      for (ProxTermMode mode : {ProxTermMode::kInclude, ProxTermMode::kOmit}) {
        const WSubproblem sub(w0, wt, contraction, eta, mode);
        const Matrix fd = finite_difference_gradient([&](const Matrix& m) { return sub.value(SpdMatrix(m)); }, w);
        worst = std::max(worst, max_relative_error(sub.gradient(SpdMatrix(w)), fd));
        ++instances;
      }
    }
  }
  return {worst <= kGradTol, std::to_string(instances) + " instances, max rel err " + fmt("%.2e", worst)};
}

Outcome criterion2() {
  std::mt19937_64 rng(2002);
  double min_eig = std::numeric_limits<double>::infinity();
  double max_asym = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const SpdMatrix w(random_spd(rng, 4, 0.01, 3.0));
    const SpdMatrix r = retract(w, random_symmetric(rng, 4, 2.0));
    min_eig = std::min(min_eig, symmetric_eigen(r.matrix()).eigenvalues.minCoeff());
    max_asym = std::max(max_asym, (r.matrix() - r.matrix().transpose()).cwiseAbs().maxCoeff());
  }
  double min_div = std::numeric_limits<double>::infinity();
  double max_scale_err = 0.0;
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const Matrix w = random_spd(rng, 4);
    const Matrix w0 = random_spd(rng, 4);
    const double d = logdet_divergence(SpdMatrix(w), SpdMatrix(w0));
    const double c = scale(rng);
    min_div = std::min(min_div, d);
    max_scale_err = std::max(max_scale_err, std::abs(logdet_divergence(SpdMatrix(c * w), SpdMatrix(c * w0)) - d));
  }
  const bool pass = min_eig >= kPdEpsilon && max_asym <= kSymmetryTol && min_div >= 0.0 && max_scale_err <= kScaleTol;
  return {pass, "min eig " + fmt("%.3e", min_eig) + ", asym " + fmt("%.1e", max_asym) + ", min div " +
                    fmt("%.2e", min_div) + ", scale err " + fmt("%.1e", max_scale_err)};
}

Outcome criterion3() {
  const ScalarSpdProblem p;
  const double f_star = toy_f_star(p);
  const auto trace = toy_run(p, 500);
  if (!trace.best_index) return {false, "no best iterate"};
  const double f_best = trace.records[*trace.best_index].objective;
  return {std::abs(f_best - f_star) <= kToyTol,
          "f_best " + fmt("%.6f", f_best) + ", grid f* " + fmt("%.6f", f_star) + ", x_best " +
              fmt("%.6f", ScalarSpdProblem::value(trace.best_point))};
}

Outcome criterion4() {
  const ScalarSpdProblem p;
  const double f_star = toy_f_star(p);
  const auto trace = toy_run(p, 500);
  SolverConfig cfg;
  cfg.max_outer_iters = 500;
  const auto checks = empirical_bound_checks<SpdMatrix>(p, trace, ScalarSpdProblem::point(0.5), f_star, cfg);
  bool pass = true;
  std::string detail;
  for (int T : {10, 50, 100, 500}) {
    const auto& c = checks[static_cast<std::size_t>(T - 1)];
    pass = pass && c.holds;
    detail += "T=" + std::to_string(T) + " gap " + fmt("%.4f", c.gap) + " <= " + fmt("%.4f", c.bound) + "; ";
  }
  return {pass, detail};
}

Outcome criterion5() {
  const ScalarSpdProblem p;
  const double f_star = toy_f_star(p);
  const int t_max = 2000;
  const auto trace = toy_run(p, t_max);
  std::vector<double> envelope(static_cast<std::size_t>(t_max) + 1, 0.0);
  double min_f = std::numeric_limits<double>::infinity();
  for (int T = 1; T <= t_max; ++T) {
    min_f = std::min(min_f, trace.records[static_cast<std::size_t>(T - 1)].objective);
    if (T >= 10) {
      const double t = static_cast<double>(T);
      envelope[static_cast<std::size_t>(T)] = (min_f - f_star) * (std::sqrt(t) - 1.0) / std::log(t);
    }
  }
  const double at_100 = envelope[100];
  const double max_env = *std::max_element(envelope.begin() + 10, envelope.end());
  const bool envelope_ok = max_env <= kEnvelopeFactor * at_100;

  long long sum_failures = 0;
  double sum = 0.0, sum_sq = 0.0;
  for (long long T = 1; T <= 1000000; ++T) {
    const double eta = 1.0 / std::sqrt(static_cast<double>(T));
    sum += eta;
    sum_sq += eta * eta;
    const auto b = corollary1_sums(T);
    if (sum < b.sum_lower || sum_sq > b.sq_sum_upper) ++sum_failures;
  }
  return {envelope_ok && sum_failures == 0,
          "envelope max " + fmt("%.4f", max_env) + " vs 3x(T=100) " + fmt("%.4f", kEnvelopeFactor * at_100) +
              " (min gap at T=2000 " + fmt("%.4f", min_f - f_star) + "); step-sum violations up to 1e6: " +
              std::to_string(sum_failures)};
}

SyntheticSpec criterion7_spec() {
  SyntheticSpec spec;
  spec.classes = 2;
  spec.samples = 200;
  spec.dim = 20;
  spec.informative_dims = 4;
  spec.noise_scale = 3.0;
  spec.seed = 1;
  return spec;
}

Outcome criterion7() {
  const SyntheticSpec spec = criterion7_spec();
  const LabeledDataset train_set = generate_labeled(spec, stream::kTrainSamples);
  SyntheticSpec test_spec = spec;
  test_spec.samples = 1000;
  const LabeledDataset test_set = generate_labeled(test_spec, stream::kTestSamples);

  RpdmlConfig cfg;
  cfg.seed = spec.seed;
  const MetricModel model = train(train_set.features, train_set.labels, cfg);
  g_feasibility.add(model.trace);

  const int k = 10;
  const double learned =
      knn_accuracy(model.w, train_set.features, train_set.labels, test_set.features, test_set.labels, k);
  const double euclid = knn_accuracy(SpdMatrix::identity(spec.dim), train_set.features, train_set.labels,
                                     test_set.features, test_set.labels, k);
  const double ratio = model.trace.back().violation / model.initial_violation;
  return {learned - euclid >= kMinAccuracyGain && ratio <= kMaxViolationRatio,
          "accuracy learned " + fmt("%.3f", learned) + " vs euclidean " + fmt("%.3f", euclid) + ", violation ratio " +
              fmt("%.3f", ratio)};
}

Outcome criterion8() {
  PanelSpec spec;
  spec.seed = 1;
  const PanelDataset panel = generate_panel(spec);
  BacktestOptions opts;
  RpdmlConfig cfg;
  cfg.seed = spec.seed;
  MetricProvider learned = [&](const Matrix& x, const Vector& r) {
    const MetricModel m = train(x, labels_from_returns(r), cfg);
    g_feasibility.add(m.trace);
    return m.w;
  };
  MetricProvider euclidean = [](const Matrix& x, const Vector&) { return SpdMatrix::identity(x.cols()); };
  const auto rl = rolling_backtest(panel, learned, opts);
  const auto re = rolling_backtest(panel, euclidean, opts);
  const int windows = std::min(rl.ic_count, re.ic_count);
  return {windows >= kMinIcWindows && rl.ic_mean >= re.ic_mean,
          "mean IC rpdml " + fmt("%.4f", rl.ic_mean) + " vs euclidean " + fmt("%.4f", re.ic_mean) + " over " +
              std::to_string(windows) + " windows"};
}

Outcome criterion9() {
  double err = 0.0;
  const auto acc = accumulated_return({0.1, 0.1});
  err = std::max({err, std::abs(acc[0] - 0.1), std::abs(acc[1] - 0.21)});
  err = std::max(err, std::abs(max_drawdown({1.0, 1.2, 0.9, 1.1}) - 0.25));
  err = std::max(err, max_drawdown({1.0, 1.1, 1.3}));

  // Three-asset, two-trade fixture with 1-NN predictions under the
  // identity metric; hand-computed selections (B, A) then (B, C).
  PanelDataset hand;
  auto col = [](std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
  };
  hand.periods.push_back({0, {"A", "B", "C"}, col({0, 1, 5}), col({0.01, 0.02, 0.10})});
  hand.periods.push_back({1, {"A", "B", "C"}, col({0.9, 4.8, 0.1}), col({0.03, -0.01, 0.05})});
  hand.periods.push_back({2, {"A", "B", "C"}, col({5.1, 0, 1.2}), col({0.2, 0.0, 0.1})});
  BacktestOptions opts;
  opts.k = 1;
  opts.top_n = 2;
  opts.normalize = false;
  const auto r = rolling_backtest(
      hand, [](const Matrix& x, const Vector&) { return SpdMatrix::identity(x.cols()); }, opts);
  bool selection_ok = r.outcomes.size() == 2 && r.outcomes[0].selected == std::vector<std::string>{"B", "A"} &&
                      r.outcomes[1].selected == std::vector<std::string>{"B", "C"} && r.period_returns.size() == 2;
  if (selection_ok) {
    err = std::max({err, std::abs(r.period_returns[0] - 0.01), std::abs(r.period_returns[1] - 0.05),
                    std::abs(r.cumulative[1] - (1.01 * 1.05 - 1.0))});
  }

  PanelSpec spec;
  spec.seed = 9;
  const PanelDataset panel = generate_panel(spec);
  BacktestOptions top;
  ReturnPredictor oracle = [&](const Matrix&, const Vector&, const Matrix& q) -> Vector {
    for (const auto& p : panel.periods) {
      if (p.features.rows() == q.rows() && p.features == q) return p.next_return;
    }
    return Vector::Zero(q.rows());
  };
  ReturnPredictor constant = [](const Matrix&, const Vector&, const Matrix& q) -> Vector {
    return Vector::Zero(q.rows());
  };
  const double oracle_final = backtest_with_predictor(panel, oracle, top).final_return();
  const double constant_final = backtest_with_predictor(panel, constant, top).final_return();
  return {err <= kArithmeticTol && selection_ok && oracle_final > constant_final,
          "max fixture err " + fmt("%.1e", err) + ", selections " + (selection_ok ? "match" : "differ") +
              ", oracle final " + fmt("%.4f", oracle_final) + " vs constant " + fmt("%.4f", constant_final)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome criterion10() {
#ifdef RPD_HAVE_CLI
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "rpd_acceptance_determinism";
  fs::remove_all(root);
  auto cli = [](std::vector<std::string> args) {
    args.insert(args.begin(), "rpd");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  };
  const std::string data = (root / "data").string();
  if (cli({"gen-data", "--seed", "1", "--out", data}) != 0) return {false, "gen-data failed"};
  bool same = true;
  std::string detail;
  for (const char* run : {"a", "b"}) {
    if (cli({"train", "--data", data + "/train.csv", "--seed", "1", "--out", (root / "train" / run).string()}) != 0 ||
        cli({"bench-convergence", "--T", "500", "--out", (root / "bench" / run).string()}) != 0) {
      return {false, "cli run failed"};
    }
  }
  for (const auto& [cmd, file] : std::vector<std::pair<std::string, std::string>>{
           {"train", "model.json"}, {"train", "trace.jsonl"}, {"bench", "trace.jsonl"}, {"bench", "summary.json"}}) {
    const std::string a = slurp(root / cmd / "a" / file);
    const std::string b = slurp(root / cmd / "b" / file);
    const bool eq = !a.empty() && a == b;
    same = same && eq;
    detail += cmd + "/" + file + (eq ? " identical" : " DIFFERS") + "; ";
  }
  // The CLI traces feed the feasibility log too.
  std::istringstream lines(slurp(root / "train" / "a" / "trace.jsonl"));
  for (std::string line; std::getline(lines, line);) {
    const auto pos = line.find("\"dual_min\":");
    if (pos != std::string::npos) g_feasibility.dual_min = std::min(g_feasibility.dual_min, std::stod(line.substr(pos + 11)));
    const auto spos = line.find("\"slack_min\":");
    if (spos != std::string::npos) {
      g_feasibility.slack_min = std::min(g_feasibility.slack_min, std::stod(line.substr(spos + 12)));
    }
    ++g_feasibility.records;
  }
  fs::remove_all(root);
  return {same, detail};
#else
  const SyntheticSpec spec = criterion7_spec();
  const LabeledDataset d = generate_labeled(spec, stream::kTrainSamples);
  RpdmlConfig cfg;
  cfg.seed = 1;
  const auto a = train(d.features, d.labels, cfg);
  const auto b = train(d.features, d.labels, cfg);
  std::ostringstream ta, tb;
  write_trace_jsonl(ta, a.trace);
  write_trace_jsonl(tb, b.trace);
  return {model_to_json(a) == model_to_json(b) && ta.str() == tb.str(), "library-level rerun (CLI not built)"};
#endif
}

Outcome criterion6() {
  const bool pass = g_feasibility.records > 0 && g_feasibility.dual_min >= 0.0 && g_feasibility.slack_min >= 0.0;
  return {pass, std::to_string(g_feasibility.records) + " records, min multiplier " +
                    fmt("%.3e", g_feasibility.dual_min) + ", min slack " + fmt("%.3e", g_feasibility.slack_min)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // 0 = no limit
  std::function<Outcome()> check;
};

}  // namespace
}  // namespace rpd

int main() {
  using namespace rpd;
  // Criterion 6 aggregates the runs of the others, so it goes last.
  const std::vector<Criterion> criteria = {
      {1, "gradient oracle", 5, criterion1},
      {2, "manifold invariants", 10, criterion2},
      {3, "toy saddle-point oracle", 30, criterion3},
      {4, "gap bound on toy problem", 60, criterion4},
      {5, "rate envelope and step sums", 120, criterion5},
      {7, "metric-learning efficacy", 120, criterion7},
      {8, "baseline IC ordering", 180, criterion8},
      {9, "backtest arithmetic", 0, criterion9},
      {10, "determinism", 0, criterion10},
      {6, "dual/slack feasibility", 0, criterion6},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit_seconds <= 0 || secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("CRITERION %d %s %s: %s [%.2f s%s]\n", c.id, pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                in_time ? "" : ", over time limit");
    std::fflush(stdout);
  }
  std::printf("acceptance complete: %d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
