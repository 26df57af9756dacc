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

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rpd/data.hpp"
#include "rpd/errors.hpp"
#include "rpd/eval.hpp"
#include "rpd/matrix_io.hpp"
#include "rpd/random.hpp"
#include "rpd/rpdml.hpp"
#include "rpd/solver.hpp"
#include "rpd/toy_problem.hpp"

namespace rpd {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string default_out_dir(const std::string& command) {
  const char* env = std::getenv("RPD_OUTPUT_DIR");
  const fs::path base = env && *env ? fs::path(env) : fs::path("runs");
  return (base / command).string();
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

std::ifstream open_input(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  return f;
}

std::string read_text(const std::string& path) {
  std::ifstream f = open_input(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void snapshot_config(const CLI::App& sub, const fs::path& dir) {
  write_text(dir / "config.txt", sub.config_to_str(true, false));
}

// Options shared by `train` and `backtest`.
struct RpdmlFlags {
  RpdmlConfig config;
  std::string prox = "include";
  std::string w0 = "identity";

  void add(CLI::App& sub) {
    sub.add_option("--c1", config.c1, "Slack penalty C1")->capture_default_str();
    sub.add_option("--c2", config.c2, "Dual regularization C2")->capture_default_str();
    sub.add_option("--eta0", config.eta0, "Initial step size")->capture_default_str();
    sub.add_option("--iters,-T", config.outer_iters, "Outer iterations")->capture_default_str();
    sub.add_option("--inner-tol", config.inner_tolerance, "Inner gradient tolerance")->capture_default_str();
    sub.add_option("--inner-iters", config.inner_max_iters, "Inner iteration cap")->capture_default_str();
    sub.add_option("--p-lo", config.percentile_lo, "Percentile for u")->capture_default_str();
    sub.add_option("--p-hi", config.percentile_hi, "Percentile for l")->capture_default_str();
    sub.add_option("--pairs", config.max_pairs_per_class, "Pair cap per side")->capture_default_str();
    sub.add_option("--prox", prox, "Proximal term in the W step")
        ->check(CLI::IsMember({"include", "omit"}))
        ->capture_default_str();
    sub.add_option("--w0", w0, "Reference metric")
        ->check(CLI::IsMember({"identity", "inverse-covariance"}))
        ->capture_default_str();
  }

  RpdmlConfig resolved(std::uint64_t seed) const {
    RpdmlConfig c = config;
    c.seed = seed;
    c.prox_mode = prox == "omit" ? ProxTermMode::kOmit : ProxTermMode::kInclude;
    c.w0_mode = w0 == "inverse-covariance" ? ReferenceMetric::kInverseCovariance : ReferenceMetric::kIdentity;
    c.validate();
    return c;
  }
};

struct GenDataArgs {
  std::string kind = "labeled";
  std::uint64_t seed = 0;
  SyntheticSpec labeled;
  int test_samples = 1000;
  PanelSpec panel;
  std::string out;
};

int run_gen_data(const GenDataArgs& a, const CLI::App& sub, std::ostream& out) {
  const fs::path dir = prepare_dir(a.out);
  if (a.kind == "labeled") {
    SyntheticSpec spec = a.labeled;
    spec.seed = a.seed;
    if (a.test_samples < spec.classes) throw ArgumentError("--test-samples must be at least --classes");
    const LabeledDataset train = generate_labeled(spec, stream::kTrainSamples);
    spec.samples = a.test_samples;
    const LabeledDataset test = generate_labeled(spec, stream::kTestSamples);
    std::ostringstream tr, te;
    write_labeled_csv(tr, train);
    write_labeled_csv(te, test);
    write_text(dir / "train.csv", tr.str());
    write_text(dir / "test.csv", te.str());
    out << "wrote " << (dir / "train.csv").string() << " (" << train.size() << " rows) and "
        << (dir / "test.csv").string() << " (" << test.size() << " rows)\n";
  } else {
    PanelSpec spec = a.panel;
    spec.seed = a.seed;
    const PanelDataset panel = generate_panel(spec);
    std::ostringstream ss;
    write_panel_csv(ss, panel);
    write_text(dir / "panel.csv", ss.str());
    out << "wrote " << (dir / "panel.csv").string() << " (" << panel.periods.size() << " periods)\n";
  }
  snapshot_config(sub, dir);
  return 0;
}

struct TrainArgs {
  std::string data;
  std::uint64_t seed = 0;
  bool normalize = false;
  RpdmlFlags rpdml;
  std::string out;
};

int run_train(const TrainArgs& a, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  std::ifstream in = open_input(a.data);
  const LabeledDataset data = read_labeled_csv(in);
  const RpdmlConfig config = a.rpdml.resolved(a.seed);

  Matrix features = data.features;
  FeatureScaler scaler;
  if (a.normalize) {
    NormalizedFeatures nf = normalize_features(features);
    for (const auto& w : nf.warnings) err << "warning: " << w << '\n';
    features = std::move(nf.features);
    scaler = std::move(nf.scaler);
  }

  const fs::path dir = prepare_dir(a.out);
  snapshot_config(sub, dir);
  std::optional<MetricModel> trained;
  try {
    trained = train(features, data.labels, config);
  } catch (const DivergedError& e) {
    std::ostringstream ss;
    write_trace_jsonl(ss, e.partial_trace());
    write_text(dir / "trace.jsonl", ss.str());
    throw;
  }
  MetricModel& model = *trained;
  for (const auto& w : model.warnings) err << "warning: " << w << '\n';
  if (a.normalize) {
    model.feature_mean = scaler.mean;
    model.feature_scale = scaler.scale;
  }

  write_text(dir / "model.json", model_to_json(model) + "\n");
  std::ostringstream trace;
  write_trace_jsonl(trace, model.trace);
  write_text(dir / "trace.jsonl", trace.str());

  const double final_violation = model.trace.empty() ? model.initial_violation : model.trace.back().violation;
  json metrics;
  metrics["samples"] = data.size();
  metrics["dim"] = data.features.cols();
  metrics["u"] = model.u;
  metrics["l"] = model.l;
  metrics["outer_iters"] = config.outer_iters;
  metrics["initial_violation"] = model.initial_violation;
  metrics["final_violation"] = final_violation;
  metrics["warnings"] = model.warnings;
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");

  out << "trained " << data.features.cols() << "x" << data.features.cols() << " metric on " << data.size()
      << " samples; violation " << model.initial_violation << " -> " << final_violation << "\n"
      << "wrote " << (dir / "model.json").string() << "\n";
  return 0;
}

// Metric and feature transform for `eval` and `backtest` baselines.
SpdMatrix baseline_metric(const std::string& name, const Matrix& features) {
  if (name == "euclidean") return SpdMatrix::identity(features.cols());
  return mahalanobis_metric(features);
}

struct EvalArgs {
  std::string metric = "euclidean";
  std::string model;
  std::string train;
  std::string test;
  int k = 10;
  bool normalize = false;
  std::string out;
};

int run_eval(const EvalArgs& a, const CLI::App& sub, std::ostream& out) {
  std::ifstream tr_in = open_input(a.train);
  std::ifstream te_in = open_input(a.test);
  const LabeledDataset train_set = read_labeled_csv(tr_in);
  const LabeledDataset test_set = read_labeled_csv(te_in);
  if (train_set.features.cols() != test_set.features.cols()) {
    throw ArgumentError("train and test files have different feature counts");
  }

  Matrix xtr = train_set.features;
  Matrix xte = test_set.features;
  std::optional<SpdMatrix> w;
  if (a.metric == "learned") {
    if (a.model.empty()) throw ArgumentError("--metric learned needs --model");
    const MetricModel model = model_from_json(read_text(a.model));
    if (model.w.dim() != xtr.cols()) throw ArgumentError("model dimension does not match the data");
    if (model.feature_mean.size()) {
      const FeatureScaler scaler{model.feature_mean, model.feature_scale, {}};
      xtr = scaler.transform(xtr);
      xte = scaler.transform(xte);
    }
    w = model.w;
  } else {
    if (a.normalize) {
      const FeatureScaler scaler = fit_scaler(xtr);
      xtr = scaler.transform(xtr);
      xte = scaler.transform(xte);
    }
    w = baseline_metric(a.metric, xtr);
  }

  const double accuracy = knn_accuracy(*w, xtr, train_set.labels, xte, test_set.labels, a.k);
  Vector pred(xte.rows());
  for (Eigen::Index i = 0; i < xte.rows(); ++i) {
    pred[i] = knn_predict(*w, xtr, train_set.targets, xte.row(i).transpose(), a.k);
  }
  std::optional<double> ic;
  try {
    ic = spearman_ic(pred, test_set.targets);
  } catch (const UndefinedCorrelationError&) {
  }

  const fs::path dir = prepare_dir(a.out);
  snapshot_config(sub, dir);
  json metrics;
  metrics["metric"] = a.metric;
  metrics["k"] = a.k;
  metrics["train_samples"] = train_set.size();
  metrics["test_samples"] = test_set.size();
  metrics["accuracy"] = accuracy;
  metrics["ic"] = ic ? json(*ic) : json(nullptr);
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  out << a.metric << ": accuracy " << accuracy << ", IC " << (ic ? std::to_string(*ic) : "undefined") << "\n";
  return 0;
}

struct BacktestArgs {
  std::string panel;
  std::string metric = "euclidean";
  std::uint64_t seed = 0;
  BacktestOptions options;
  bool no_normalize = false;
  RpdmlFlags rpdml;
  std::string out;
};

int run_backtest(const BacktestArgs& a, const CLI::App& sub, std::ostream& out) {
  std::ifstream in = open_input(a.panel);
  const PanelDataset panel = read_panel_csv(in);
  BacktestOptions options = a.options;
  options.normalize = !a.no_normalize;

  MetricProvider provider;
  if (a.metric == "learned") {
    provider = learned_metric_provider(a.rpdml.resolved(a.seed));
  } else {
    const std::string name = a.metric;
    provider = [name](const Matrix& x, const Vector&) { return baseline_metric(name, x); };
  }
  const PortfolioResult result = rolling_backtest(panel, provider, options);

  const fs::path dir = prepare_dir(a.out);
  snapshot_config(sub, dir);
  write_text(dir / "portfolio.json", portfolio_to_json(result) + "\n");
  out << a.metric << ": " << result.traded_periods.size() << " traded periods, final return "
      << result.final_return() << ", IC " << result.ic_mean << " +/- " << result.ic_std << "\n";
  return 0;
}

struct BenchArgs {
  int T = 500;
  double x0 = 0.5;
  double target = 2.0;
  double upper = 1.0;
  SolverConfig solver;
  std::string inner = "closed-form";
  bool dual_term = false;
  std::string out;
};

int run_bench(const BenchArgs& a, const CLI::App& sub, std::ostream& out) {
  if (a.T < 1) throw ArgumentError("--T must be positive");
  if (!(a.x0 > 0.0)) throw ArgumentError("--x0 must be positive");
  SolverConfig config = a.solver;
  config.max_outer_iters = a.T;
  const auto method = a.inner == "descent" ? ScalarSpdProblem::InnerMethod::kRiemannianDescent
                                           : ScalarSpdProblem::InnerMethod::kClosedForm;
  const ScalarSpdProblem problem(a.target, a.upper, method);
  const SpdMatrix x0 = ScalarSpdProblem::point(a.x0);
  const double f_star = a.target > a.upper ? (a.target - a.upper) * (a.target - a.upper) : 0.0;

  const RunTrace<SpdMatrix> trace = run(problem, x0, config);
  const auto checks = empirical_bound_checks(problem, trace, x0, f_star, config, a.dual_term);

  const fs::path dir = prepare_dir(a.out);
  snapshot_config(sub, dir);
  std::ostringstream lines;
  bool all_ok = true;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    json rec = json::parse(trace_record_json(trace.records[i]));
    rec["x"] = ScalarSpdProblem::value(trace.iterates[i]);
    rec["gap"] = checks[i].gap;
    rec["bound"] = checks[i].bound;
    rec["bound_ok"] = checks[i].holds;
    all_ok = all_ok && checks[i].holds;
    lines << rec.dump() << '\n';
  }
  write_text(dir / "trace.jsonl", lines.str());

  const auto sums = corollary1_sums(a.T);
  const auto etas = step_sizes(a.T, 1.0);
  double sum = 0.0, sum_sq = 0.0;
  for (double e : etas) {
    sum += e;
    sum_sq += e * e;
  }
  json summary;
  summary["T"] = a.T;
  summary["f_star"] = f_star;
  summary["x_final"] = ScalarSpdProblem::value(trace.final_point);
  if (trace.best_index) {
    summary["best_t"] = *trace.best_index;
    summary["x_best"] = ScalarSpdProblem::value(trace.best_point);
    summary["f_best"] = trace.records[*trace.best_index].objective;
  }
  summary["min_gap"] = checks.back().gap;
  summary["bound"] = checks.back().bound;
  summary["all_bounds_ok"] = all_ok;
  summary["sum_eta"] = sum;
  summary["sum_eta_sq"] = sum_sq;
  summary["sum_eta_lower"] = sums.sum_lower;
  summary["sum_eta_sq_upper"] = sums.sq_sum_upper;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  out << "T=" << a.T << ": min gap " << checks.back().gap << ", bound " << checks.back().bound
      << (all_ok ? ", bound held at every step\n" : ", bound violated\n");
  return 0;
}

struct ExportArgs {
  std::string portfolio;
  std::string trace;
  std::string out;
};

int run_export(const ExportArgs& a, const CLI::App& sub, std::ostream& out) {
  if (a.portfolio.empty() && a.trace.empty()) throw ArgumentError("give --portfolio and/or --trace");
  const fs::path dir = prepare_dir(a.out);
  snapshot_config(sub, dir);
  if (!a.portfolio.empty()) {
    json p;
    try {
      p = json::parse(read_text(a.portfolio));
    } catch (const json::exception& e) {
      throw IoError("portfolio json: " + std::string(e.what()));
    }
    const auto periods = p.at("traded_periods").get<std::vector<int>>();
    const auto returns = p.at("period_returns").get<std::vector<double>>();
    const auto cumulative = p.at("cumulative").get<std::vector<double>>();
    const auto drawdown = p.at("drawdown").get<std::vector<double>>();
    if (returns.size() != periods.size() || cumulative.size() != periods.size() || drawdown.size() != periods.size()) {
      throw IoError("portfolio json: series lengths differ");
    }
    std::ostringstream csv;
    csv << "period,return,cumulative,drawdown\n";
    for (std::size_t i = 0; i < periods.size(); ++i) {
      csv << periods[i] << ',' << format_double(returns[i]) << ',' << format_double(cumulative[i]) << ','
          << format_double(drawdown[i]) << '\n';
    }
    write_text(dir / "portfolio_series.csv", csv.str());
    std::ostringstream annual;
    annual << "year,return\n";
    const auto years = p.at("annual_returns").get<std::vector<double>>();
    for (std::size_t i = 0; i < years.size(); ++i) annual << i << ',' << format_double(years[i]) << '\n';
    write_text(dir / "annual_returns.csv", annual.str());
    out << "wrote " << (dir / "portfolio_series.csv").string() << "\n";
  }
  if (!a.trace.empty()) {
    std::ifstream in = open_input(a.trace);
    const std::vector<std::string> columns = {"t", "eta", "f", "h_violation", "dual_norm", "dual_min",
                                              "inner_iters", "slack_min", "gap", "bound", "bound_ok"};
    std::vector<json> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        rows.push_back(json::parse(line));
      } catch (const json::exception& e) {
        throw IoError("trace jsonl: " + std::string(e.what()));
      }
    }
    std::vector<std::string> present;
    for (const auto& c : columns) {
      if (!rows.empty() && rows.front().contains(c)) present.push_back(c);
    }
    std::ostringstream csv;
    for (std::size_t j = 0; j < present.size(); ++j) csv << (j ? "," : "") << present[j];
    csv << '\n';
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < present.size(); ++j) {
        if (j) csv << ',';
        const auto& v = r.at(present[j]);
        if (v.is_boolean()) {
          csv << (v.get<bool>() ? 1 : 0);
        } else if (v.is_number_float()) {
          csv << format_double(v.get<double>());
        } else {
          csv << v.dump();
        }
      }
      csv << '\n';
    }
    write_text(dir / "convergence.csv", csv.str());
    out << "wrote " << (dir / "convergence.csv").string() << "\n";
  }
  return 0;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Proximal primal-dual metric learning on the SPD manifold", "rpd"};
  app.set_config("--config", "", "INI file of option defaults; command-line flags win");
  app.require_subcommand(1);
  app.fallthrough(false);

  std::function<int()> action;

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a seeded synthetic labeled dataset or return panel");
  gen_cmd->add_option("--kind", gen.kind, "labeled (train.csv + test.csv) or panel (panel.csv)")
      ->check(CLI::IsMember({"labeled", "panel"}))
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Master seed")->required();
  gen_cmd->add_option("--classes", gen.labeled.classes, "Number of classes")->capture_default_str();
  gen_cmd->add_option("--samples", gen.labeled.samples, "Training samples")->capture_default_str();
  gen_cmd->add_option("--test-samples", gen.test_samples, "Held-out samples")->capture_default_str();
  gen_cmd->add_option("--dim", gen.labeled.dim, "Feature dimension")->capture_default_str();
  gen_cmd->add_option("--informative", gen.labeled.informative_dims, "Informative dimensions")->capture_default_str();
  gen_cmd->add_option("--noise-scale", gen.labeled.noise_scale, "Variance of the distractor dimensions")
      ->capture_default_str();
  gen_cmd->add_option("--separation", gen.labeled.separation, "Class-center offset per informative dim")
      ->capture_default_str();
  gen_cmd->add_option("--assets", gen.panel.assets, "Panel: assets per period")->capture_default_str();
  gen_cmd->add_option("--periods", gen.panel.periods, "Panel: number of periods")->capture_default_str();
  gen_cmd->add_option("--signal", gen.panel.signal, "Panel: return per unit informative factor")
      ->capture_default_str();
  gen_cmd->add_option("--return-noise", gen.panel.return_noise, "Panel: return noise std")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory");
  gen_cmd->callback([&] {
    gen.panel.dim = gen.labeled.dim;
    gen.panel.informative_dims = gen.labeled.informative_dims;
    gen.panel.noise_scale = gen.labeled.noise_scale;
    if (gen.out.empty()) gen.out = default_out_dir("gen-data");
    action = [&] { return run_gen_data(gen, *gen_cmd, out); };
  });

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Learn a metric from a labeled CSV");
  train_cmd->add_option("--data", tr.data, "Labeled CSV (label,target,f_0..)")->required();
  train_cmd->add_option("--seed", tr.seed, "Master seed (pair sampling)")->required();
  train_cmd->add_flag("--normalize", tr.normalize, "Standardize features first; stored in the model");
  tr.rpdml.add(*train_cmd);
  train_cmd->add_option("--out", tr.out, "Output directory");
  train_cmd->callback([&] {
    if (tr.out.empty()) tr.out = default_out_dir("train");
    action = [&] { return run_train(tr, *train_cmd, out, err); };
  });

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "k-NN accuracy and IC of a metric on held-out data");
  eval_cmd->add_option("--metric", ev.metric, "euclidean, mahalanobis or learned")
      ->check(CLI::IsMember({"euclidean", "mahalanobis", "learned"}))
      ->capture_default_str();
  eval_cmd->add_option("--model", ev.model, "model.json from train (for --metric learned)");
  eval_cmd->add_option("--train", ev.train, "Reference labeled CSV")->required();
  eval_cmd->add_option("--test", ev.test, "Held-out labeled CSV")->required();
  eval_cmd->add_option("--k", ev.k, "Neighbors")->capture_default_str();
  eval_cmd->add_flag("--normalize", ev.normalize, "Standardize baselines with training statistics");
  eval_cmd->add_option("--out", ev.out, "Output directory");
  eval_cmd->callback([&] {
    if (ev.out.empty()) ev.out = default_out_dir("eval");
    action = [&] { return run_eval(ev, *eval_cmd, out); };
  });

  BacktestArgs bt;
  auto* bt_cmd = app.add_subcommand("backtest", "Rolling top-N k-NN backtest on a return panel");
  bt_cmd->add_option("--panel", bt.panel, "Panel CSV (period,asset_id,f_0..,next_return)")->required();
  bt_cmd->add_option("--metric", bt.metric, "euclidean, mahalanobis or learned")
      ->check(CLI::IsMember({"euclidean", "mahalanobis", "learned"}))
      ->capture_default_str();
  bt_cmd->add_option("--seed", bt.seed, "Master seed (learned metric)")->capture_default_str();
  bt_cmd->add_option("--k", bt.options.k, "Neighbors")->capture_default_str();
  bt_cmd->add_option("--top-n", bt.options.top_n, "Assets held per period")->capture_default_str();
  bt_cmd->add_option("--mdd-window", bt.options.mdd_window, "Trailing periods for drawdown")->capture_default_str();
  bt_cmd->add_option("--periods-per-year", bt.options.periods_per_year, "Periods per annual return")
      ->capture_default_str();
  bt_cmd->add_flag("--no-normalize", bt.no_normalize, "Use raw features");
  bt.rpdml.add(*bt_cmd);
  bt_cmd->add_option("--out", bt.out, "Output directory");
  bt_cmd->callback([&] {
    if (bt.metric == "learned" && bt_cmd->count("--seed") == 0) {
      throw CLI::ValidationError("--seed", "required with --metric learned");
    }
    if (bt.out.empty()) bt.out = default_out_dir("backtest");
    action = [&] { return run_backtest(bt, *bt_cmd, out); };
  });

  BenchArgs bn;
  bn.solver.eta0 = 1.0;
  auto* bench_cmd = app.add_subcommand("bench-convergence", "Run the 1x1 toy problem and check the gap bound");
  bench_cmd->add_option("--T", bn.T, "Outer iterations")->capture_default_str();
  bench_cmd->add_option("--x0", bn.x0, "Starting point")->capture_default_str();
  bench_cmd->add_option("--target", bn.target, "Objective (x - target)^2")->capture_default_str();
  bench_cmd->add_option("--upper", bn.upper, "Constraint x <= upper")->capture_default_str();
  bench_cmd->add_option("--eta0", bn.solver.eta0, "Initial step size")->capture_default_str();
  bench_cmd->add_option("--alpha", bn.solver.alpha, "Dual regularization")->capture_default_str();
  bench_cmd->add_option("--inner", bn.inner, "closed-form or descent")
      ->check(CLI::IsMember({"closed-form", "descent"}))
      ->capture_default_str();
  bench_cmd->add_flag("--dual-term", bn.dual_term, "Add alpha * max |lambda| to G");
  bench_cmd->add_option("--out", bn.out, "Output directory");
  bench_cmd->callback([&] {
    if (bn.out.empty()) bn.out = default_out_dir("bench-convergence");
    action = [&] { return run_bench(bn, *bench_cmd, out); };
  });

  ExportArgs ex;
  auto* export_cmd = app.add_subcommand("export-plots", "Turn portfolio JSON and trace JSON-lines into CSV series");
  export_cmd->add_option("--portfolio", ex.portfolio, "portfolio.json from backtest");
  export_cmd->add_option("--trace", ex.trace, "trace.jsonl from train or bench-convergence");
  export_cmd->add_option("--out", ex.out, "Output directory");
  export_cmd->callback([&] {
    if (ex.out.empty()) ex.out = default_out_dir("export-plots");
    action = [&] { return run_export(ex, *export_cmd, out); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return 1;
  }

  try {
    return action();
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return 2;
  } catch (const InvariantError& e) {
    err << "numeric error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace rpd
