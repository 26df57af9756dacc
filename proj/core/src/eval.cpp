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

#include "rpd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "rpd/data.hpp"
#include "rpd/errors.hpp"
#include "rpd/matrix_io.hpp"

namespace rpd {

SpdMatrix mahalanobis_metric(const Matrix& features, double ridge) {
  if (features.rows() < 2) throw ArgumentError("mahalanobis_metric: need at least two samples");
  if (!(ridge >= 0.0)) throw ArgumentError("mahalanobis_metric: ridge must be nonnegative");
  const Matrix centered = features.rowwise() - features.colwise().mean();
  Matrix cov = centered.transpose() * centered / static_cast<double>(features.rows() - 1);
  cov.diagonal().array() += ridge;
  return spd_inverse(SpdMatrix(cov));
}

std::vector<Eigen::Index> knn_indices(const SpdMatrix& w, const Matrix& train_features, const Vector& query, int k) {
  const Eigen::Index n = train_features.rows();
  if (n == 0) throw ArgumentError("knn: empty training set");
  if (k < 1 || k > n) throw ArgumentError("knn: k must lie in [1, training size]");
  if (train_features.cols() != w.dim() || query.size() != w.dim()) throw ArgumentError("knn: dimension mismatch");
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector d = train_features.row(i).transpose() - query;
    dist[static_cast<std::size_t>(i)] = d.dot(w.matrix() * d);
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  auto closer = [&dist](Eigen::Index a, Eigen::Index b) {
    const double da = dist[static_cast<std::size_t>(a)];
    const double db = dist[static_cast<std::size_t>(b)];
    return da < db || (da == db && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), closer);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

double knn_predict(const SpdMatrix& w, const Matrix& train_features, const Vector& train_targets,
                   const Vector& query, int k) {
  if (train_targets.size() != train_features.rows()) throw ArgumentError("knn_predict: target count mismatch");
  double sum = 0.0;
  for (Eigen::Index i : knn_indices(w, train_features, query, k)) sum += train_targets[i];
  return sum / k;
}

int knn_classify(const SpdMatrix& w, const Matrix& train_features, const std::vector<int>& train_labels,
                 const Vector& query, int k) {
  if (train_labels.size() != static_cast<std::size_t>(train_features.rows())) {
    throw ArgumentError("knn_classify: label count mismatch");
  }
  const auto nearest = knn_indices(w, train_features, query, k);
  std::map<int, std::pair<int, std::size_t>> votes;  // label -> (count, rank of first neighbor)
  for (std::size_t r = 0; r < nearest.size(); ++r) {
    const int label = train_labels[static_cast<std::size_t>(nearest[r])];
    auto [it, inserted] = votes.try_emplace(label, 0, r);
    ++it->second.first;
  }
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it) {
    const auto& [count, first] = it->second;
    if (count > best->second.first || (count == best->second.first && first < best->second.second)) best = it;
  }
  return best->first;
}

double knn_accuracy(const SpdMatrix& w, const Matrix& train_features, const std::vector<int>& train_labels,
                    const Matrix& test_features, const std::vector<int>& test_labels, int k) {
  if (test_features.rows() == 0) throw ArgumentError("knn_accuracy: empty test set");
  if (test_labels.size() != static_cast<std::size_t>(test_features.rows())) {
    throw ArgumentError("knn_accuracy: label count mismatch");
  }
  int hits = 0;
  for (Eigen::Index i = 0; i < test_features.rows(); ++i) {
    const Vector q = test_features.row(i).transpose();
    if (knn_classify(w, train_features, train_labels, q, k) == test_labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test_features.rows());
}

Vector average_ranks(const Vector& v) {
  const auto n = static_cast<std::size_t>(v.size());
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&v](std::size_t a, std::size_t b) {
    return v[static_cast<Eigen::Index>(a)] < v[static_cast<Eigen::Index>(b)];
  });
  Vector ranks(v.size());
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[static_cast<Eigen::Index>(idx[j + 1])] == v[static_cast<Eigen::Index>(idx[i])]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[static_cast<Eigen::Index>(idx[k])] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman_ic(const Vector& pred, const Vector& actual) {
  if (pred.size() != actual.size()) throw ArgumentError("spearman_ic: length mismatch");
  if (pred.size() < 2) throw ArgumentError("spearman_ic: need at least two observations");
  if (!pred.allFinite() || !actual.allFinite()) throw ArgumentError("spearman_ic: non-finite input");
  const Vector rp = average_ranks(pred);
  const Vector ra = average_ranks(actual);
  const Vector dp = rp.array() - rp.mean();
  const Vector da = ra.array() - ra.mean();
  const double sp = dp.squaredNorm();
  const double sa = da.squaredNorm();
  if (sp == 0.0 || sa == 0.0) throw UndefinedCorrelationError("spearman_ic: constant input has no rank correlation");
  return std::clamp(dp.dot(da) / std::sqrt(sp * sa), -1.0, 1.0);
}

void PanelDataset::validate() const {
  for (std::size_t p = 0; p < periods.size(); ++p) {
    const auto& per = periods[p];
    const auto n = static_cast<Eigen::Index>(per.asset_ids.size());
    if (per.features.rows() != n || per.next_return.size() != n) {
      throw ArgumentError("panel: period " + std::to_string(per.period) + " has inconsistent row counts");
    }
    if (per.features.cols() != dim()) throw ArgumentError("panel: feature dimension changes across periods");
    if (p > 0 && per.period <= periods[p - 1].period) throw ArgumentError("panel: periods must strictly increase");
  }
}

void write_panel_csv(std::ostream& out, const PanelDataset& data) {
  data.validate();
  out << "period,asset_id";
  for (Eigen::Index j = 0; j < data.dim(); ++j) out << ",f_" << j;
  out << ",next_return\n";
  for (const auto& per : data.periods) {
    for (Eigen::Index i = 0; i < per.features.rows(); ++i) {
      out << per.period << ',' << per.asset_ids[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < per.features.cols(); ++j) out << ',' << format_double(per.features(i, j));
      out << ',' << format_double(per.next_return[i]) << '\n';
    }
  }
}

PanelDataset read_panel_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("panel csv: missing header");
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "period" || header[1] != "asset_id" || header.back() != "next_return") {
    throw IoError("panel csv: header must be period,asset_id,f_0..,next_return");
  }
  const std::size_t dim = header.size() - 3;
  struct Row {
    std::string id;
    std::vector<double> f;
    double r;
  };
  PanelDataset data;
  std::vector<Row> rows;
  int current = 0;
  bool open = false;
  auto flush = [&] {
    if (!open) return;
    PanelPeriod per;
    per.period = current;
    per.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    per.next_return.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      per.asset_ids.push_back(rows[i].id);
      for (std::size_t j = 0; j < dim; ++j) {
        per.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].f[j];
      }
      per.next_return[static_cast<Eigen::Index>(i)] = rows[i].r;
    }
    data.periods.push_back(std::move(per));
    rows.clear();
  };
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw IoError("panel csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                    " fields, expected " + std::to_string(header.size()));
    }
    const double pv = parse_double(cells[0], "panel csv period");
    const int period = static_cast<int>(pv);
    if (static_cast<double>(period) != pv) throw IoError("panel csv: period must be an integer");
    if (!open || period != current) {
      flush();
      current = period;
      open = true;
    }
    Row row{cells[1], {}, 0.0};
    for (std::size_t j = 0; j < dim; ++j) row.f.push_back(parse_double(cells[2 + j], "panel csv feature"));
    row.r = parse_double(cells.back(), "panel csv next_return");
    rows.push_back(std::move(row));
  }
  flush();
  if (data.periods.empty()) throw IoError("panel csv: no data rows");
  try {
    data.validate();
  } catch (const ArgumentError& e) {
    throw IoError(std::string("panel csv: ") + e.what());
  }
  return data;
}

std::vector<double> accumulated_return(const std::vector<double>& period_returns) {
  std::vector<double> out;
  out.reserve(period_returns.size());
  // c_k = c_{k-1} + (1 + c_{k-1}) r_k, so a single period returns r exactly.
  double c = 0.0;
  for (double r : period_returns) {
    if (!(r > -1.0)) throw ArgumentError("accumulated_return: period return must exceed -1");
    c += (1.0 + c) * r;
    out.push_back(c);
  }
  return out;
}

double max_drawdown(const std::vector<double>& values) {
  if (values.empty()) throw ArgumentError("max_drawdown: empty series");
  double peak = values.front();
  double worst = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw ArgumentError("max_drawdown: values must be positive");
    peak = std::max(peak, v);
    worst = std::max(worst, (peak - v) / peak);
  }
  return worst;
}

std::vector<double> rolling_max_drawdown(const std::vector<double>& cumulative, int window) {
  if (window < 1) throw ArgumentError("rolling_max_drawdown: window must be positive");
  std::vector<double> values;
  values.reserve(cumulative.size() + 1);
  values.push_back(1.0);
  for (double c : cumulative) values.push_back(1.0 + c);
  std::vector<double> out;
  out.reserve(cumulative.size());
  for (std::size_t k = 1; k < values.size(); ++k) {
    const std::size_t first = k > static_cast<std::size_t>(window) ? k - static_cast<std::size_t>(window) : 0;
    out.push_back(max_drawdown(std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(first),
                                                   values.begin() + static_cast<std::ptrdiff_t>(k) + 1)));
  }
  return out;
}

std::vector<int> labels_from_returns(const Vector& returns) {
  if (returns.size() < 2) throw ArgumentError("labels_from_returns: need at least two returns");
  std::vector<int> labels(static_cast<std::size_t>(returns.size()));
  int positive = 0;
  for (Eigen::Index i = 0; i < returns.size(); ++i) {
    labels[static_cast<std::size_t>(i)] = returns[i] > 0.0 ? 1 : 0;
    positive += labels[static_cast<std::size_t>(i)];
  }
  if (positive == 0 || positive == returns.size()) {
    std::vector<double> sorted(returns.data(), returns.data() + returns.size());
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (Eigen::Index i = 0; i < returns.size(); ++i) labels[static_cast<std::size_t>(i)] = returns[i] >= median ? 1 : 0;
  }
  return labels;
}

std::vector<std::size_t> select_top(const Vector& predictions, const std::vector<std::string>& asset_ids, int top_n) {
  if (static_cast<std::size_t>(predictions.size()) != asset_ids.size()) {
    throw ArgumentError("select_top: prediction count mismatch");
  }
  if (top_n < 1 || static_cast<std::size_t>(top_n) > asset_ids.size()) {
    throw ArgumentError("select_top: top_n must lie in [1, asset count]");
  }
  std::vector<std::size_t> idx(asset_ids.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double pa = predictions[static_cast<Eigen::Index>(a)];
    const double pb = predictions[static_cast<Eigen::Index>(b)];
    if (pa != pb) return pa > pb;
    return asset_ids[a] < asset_ids[b];
  });
  idx.resize(static_cast<std::size_t>(top_n));
  return idx;
}

PortfolioResult backtest_with_predictor(const PanelDataset& data, const ReturnPredictor& predictor,
                                        const BacktestOptions& options) {
  data.validate();
  if (data.periods.size() < 2) throw ArgumentError("backtest: need at least two periods");
  if (options.k < 1 || options.top_n < 1) throw ArgumentError("backtest: k and top_n must be positive");
  if (options.periods_per_year < 1) throw ArgumentError("backtest: periods_per_year must be positive");

  PortfolioResult result;
  std::vector<double> ics;
  for (std::size_t p = 1; p < data.periods.size(); ++p) {
    const auto& train = data.periods[p - 1];
    const auto& test = data.periods[p];
    PeriodOutcome outcome;
    outcome.period = test.period;
    if (train.features.rows() < options.k) {
      outcome.skip_reason = "training window has fewer than k assets";
    } else if (test.features.rows() < options.top_n) {
      outcome.skip_reason = "period has fewer than top_n assets";
    }
    if (!outcome.skip_reason.empty()) {
      result.skipped_periods.push_back(test.period);
      result.outcomes.push_back(std::move(outcome));
      continue;
    }

    const Vector pred = predictor(train.features, train.next_return, test.features);
    if (pred.size() != test.features.rows()) throw ArgumentError("backtest: predictor returned the wrong length");
    double sum = 0.0;
    for (std::size_t i : select_top(pred, test.asset_ids, options.top_n)) {
      outcome.selected.push_back(test.asset_ids[i]);
      sum += test.next_return[static_cast<Eigen::Index>(i)];
    }
    outcome.traded = true;
    outcome.portfolio_return = sum / options.top_n;
    try {
      outcome.ic = spearman_ic(pred, test.next_return);
      ics.push_back(*outcome.ic);
    } catch (const UndefinedCorrelationError&) {
      // A constant prediction has no rank information; the period still trades.
    }
    result.traded_periods.push_back(test.period);
    result.period_returns.push_back(outcome.portfolio_return);
    result.outcomes.push_back(std::move(outcome));
  }

  result.cumulative = accumulated_return(result.period_returns);
  result.drawdown = rolling_max_drawdown(result.cumulative, options.mdd_window);
  const auto per_year = static_cast<std::size_t>(options.periods_per_year);
  for (std::size_t start = 0; start < result.period_returns.size(); start += per_year) {
    double growth = 1.0;
    for (std::size_t i = start; i < std::min(start + per_year, result.period_returns.size()); ++i) {
      growth *= 1.0 + result.period_returns[i];
    }
    result.annual_returns.push_back(growth - 1.0);
  }
  result.ic_count = static_cast<int>(ics.size());
  if (!ics.empty()) {
    const double n = static_cast<double>(ics.size());
    result.ic_mean = std::accumulate(ics.begin(), ics.end(), 0.0) / n;
    double ss = 0.0;
    for (double ic : ics) ss += (ic - result.ic_mean) * (ic - result.ic_mean);
    result.ic_std = ics.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return result;
}

PortfolioResult rolling_backtest(const PanelDataset& data, const MetricProvider& metric_source,
                                 const BacktestOptions& options) {
  const int k = options.k;
  const bool normalize = options.normalize;
  ReturnPredictor predictor = [&](const Matrix& train_x, const Vector& train_y, const Matrix& test_x) {
    Matrix tx = train_x;
    Matrix qx = test_x;
    if (normalize) {
      const FeatureScaler scaler = fit_scaler(train_x);
      tx = scaler.transform(train_x);
      qx = scaler.transform(test_x);
    }
    const SpdMatrix w = metric_source(tx, train_y);
    Vector pred(qx.rows());
    for (Eigen::Index i = 0; i < qx.rows(); ++i) pred[i] = knn_predict(w, tx, train_y, qx.row(i).transpose(), k);
    return pred;
  };
  return backtest_with_predictor(data, predictor, options);
}

std::string portfolio_to_json(const PortfolioResult& result) {
  nlohmann::ordered_json j;
  j["traded_periods"] = result.traded_periods;
  j["period_returns"] = result.period_returns;
  j["cumulative"] = result.cumulative;
  j["drawdown"] = result.drawdown;
  j["annual_returns"] = result.annual_returns;
  j["skipped_periods"] = result.skipped_periods;
  j["final_return"] = result.final_return();
  j["max_drawdown"] = result.drawdown.empty() ? 0.0 : *std::max_element(result.drawdown.begin(), result.drawdown.end());
  j["ic_mean"] = result.ic_mean;
  j["ic_std"] = result.ic_std;
  j["ic_count"] = result.ic_count;
  nlohmann::ordered_json periods = nlohmann::ordered_json::array();
  for (const auto& o : result.outcomes) {
    nlohmann::ordered_json e;
    e["period"] = o.period;
    e["traded"] = o.traded;
    if (o.traded) {
      e["return"] = o.portfolio_return;
      e["selected"] = o.selected;
      if (o.ic) e["ic"] = *o.ic;
    } else {
      e["skip_reason"] = o.skip_reason;
    }
    periods.push_back(std::move(e));
  }
  j["periods"] = std::move(periods);
  return j.dump(2);
}

}  // namespace rpd
