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

// Baseline metrics, k-NN prediction, rank correlation and the rolling
// top-N backtest with its return and drawdown arithmetic.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rpd/spd.hpp"

namespace rpd {

/// (Cov + ridge I)^-1 with the unbiased (N - 1) sample covariance.
SpdMatrix mahalanobis_metric(const Matrix& features, double ridge = 1e-6);

/// Indices of the k training rows closest to `query` under W, nearest
/// first; equal distances keep the lower row index first.
std::vector<Eigen::Index> knn_indices(const SpdMatrix& w, const Matrix& train_features, const Vector& query, int k);

/// Unweighted mean of the targets of the k nearest training rows.
double knn_predict(const SpdMatrix& w, const Matrix& train_features, const Vector& train_targets,
                   const Vector& query, int k);

/// Majority label among the k nearest rows; a tied vote goes to the tied
/// label whose first neighbor is nearest.
int knn_classify(const SpdMatrix& w, const Matrix& train_features, const std::vector<int>& train_labels,
                 const Vector& query, int k);

double knn_accuracy(const SpdMatrix& w, const Matrix& train_features, const std::vector<int>& train_labels,
                    const Matrix& test_features, const std::vector<int>& test_labels, int k);

/// 1-based ranks with ties sharing their average rank.
Vector average_ranks(const Vector& v);

/// Pearson correlation of the average-rank vectors. Throws
/// UndefinedCorrelationError when either input is constant.
double spearman_ic(const Vector& pred, const Vector& actual);

struct PanelPeriod {
  int period = 0;
  std::vector<std::string> asset_ids;
  Matrix features;     // assets x dims
  Vector next_return;  // realized return over the following period
};

struct PanelDataset {
  std::vector<PanelPeriod> periods;

  Eigen::Index dim() const { return periods.empty() ? 0 : periods.front().features.cols(); }
  /// Row counts agree within each period, dims agree across periods and
  /// period labels strictly increase.
  void validate() const;
};

/// Columns: period, asset_id, f_0..f_{d-1}, next_return. Rows are grouped
/// by period in file order.
void write_panel_csv(std::ostream& out, const PanelDataset& data);
PanelDataset read_panel_csv(std::istream& in);

/// c_k = prod_{i<=k} (1 + r_i) - 1.
std::vector<double> accumulated_return(const std::vector<double>& period_returns);

/// max_t (peak_{<=t} - v_t) / peak_{<=t} over a positive value series.
double max_drawdown(const std::vector<double>& values);

/// Drawdown over a trailing window: entry k covers the last `window`
/// periods, i.e. values (1 + c_{k-window}) .. (1 + c_k) with 1 standing in
/// for c_{-1}.
std::vector<double> rolling_max_drawdown(const std::vector<double>& cumulative, int window);

struct BacktestOptions {
  int k = 10;
  int top_n = 10;
  int mdd_window = 4;        // trailing periods for the drawdown series
  int periods_per_year = 4;  // grouping for annual returns
  bool normalize = true;     // standardize with training-window statistics
};

struct PeriodOutcome {
  int period = 0;
  bool traded = false;
  std::string skip_reason;
  double portfolio_return = 0.0;
  std::vector<std::string> selected;
  std::optional<double> ic;
};

struct PortfolioResult {
  std::vector<PeriodOutcome> outcomes;  // one per evaluated period
  std::vector<int> traded_periods;
  std::vector<double> period_returns;   // traded periods only
  std::vector<double> cumulative;
  std::vector<double> drawdown;         // rolling, aligned with cumulative
  std::vector<double> annual_returns;
  std::vector<int> skipped_periods;
  double ic_mean = 0.0;
  double ic_std = 0.0;
  int ic_count = 0;

  double final_return() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

/// Maps (training features, training targets, query features) to one
/// predicted return per query row.
using ReturnPredictor = std::function<Vector(const Matrix&, const Vector&, const Matrix&)>;

/// Builds a metric from one training window (features, targets).
using MetricProvider = std::function<SpdMatrix(const Matrix&, const Vector&)>;

/// Class labels for a window of returns: 1 where r > 0, else 0. When every
/// return has the same sign, 1 marks returns at or above the upper median
/// instead so both classes are present.
std::vector<int> labels_from_returns(const Vector& returns);

/// For every period p after the first: predict period p's next returns
/// from period p-1's (features, next returns), buy the top_n predictions
/// (ties to the smaller asset id) with equal weight and book the mean
/// realized return. Windows with fewer than k training rows, or test
/// periods with fewer than top_n assets, are skipped and recorded.
PortfolioResult backtest_with_predictor(const PanelDataset& data, const ReturnPredictor& predictor,
                                        const BacktestOptions& options);

/// The k-NN backtest: the metric provider sees the (optionally
/// standardized) training window and k-NN under that metric supplies the
/// predictions.
PortfolioResult rolling_backtest(const PanelDataset& data, const MetricProvider& metric_source,
                                 const BacktestOptions& options);

/// Indices of the top_n largest predictions, ties broken by asset id.
std::vector<std::size_t> select_top(const Vector& predictions, const std::vector<std::string>& asset_ids, int top_n);

std::string portfolio_to_json(const PortfolioResult& result);

}  // namespace rpd
