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

#include "rpd/data.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>

#include "rpd/errors.hpp"
#include "rpd/matrix_io.hpp"
#include "rpd/random.hpp"

namespace rpd {
namespace {

constexpr double kDegenerateStd = 1e-12;

// Fills one feature row: unit-variance informative coordinates around
// `center`, then distractors with variance noise_scale.
void draw_features(std::mt19937_64& rng, const Vector& center, int informative, double noise_scale,
                   Matrix::RowXpr row) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double noise_sd = std::sqrt(noise_scale);
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    const double z = normal(rng);
    row[j] = j < informative ? center[j] + z : noise_sd * z;
  }
}

}  // namespace

Matrix FeatureScaler::transform(const Matrix& features) const {
  if (features.cols() != mean.size()) throw ArgumentError("FeatureScaler: dimension mismatch");
  return (features.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Vector FeatureScaler::transform_row(const Vector& row) const {
  if (row.size() != mean.size()) throw ArgumentError("FeatureScaler: dimension mismatch");
  return (row - mean).cwiseQuotient(scale);
}

FeatureScaler fit_scaler(const Matrix& features) {
  if (features.size() == 0) throw ArgumentError("normalize: empty matrix");
  if (features.rows() < 2) throw ArgumentError("normalize: need at least two samples");
  FeatureScaler s;
  s.mean = features.colwise().mean().transpose();
  s.scale.resize(features.cols());
  s.degenerate.assign(static_cast<std::size_t>(features.cols()), false);
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double var = (features.col(j).array() - s.mean[j]).square().mean();
    const double sd = std::sqrt(var);
    if (sd < kDegenerateStd) {
      s.scale[j] = 1.0;
      s.degenerate[static_cast<std::size_t>(j)] = true;
    } else {
      s.scale[j] = sd;
    }
  }
  return s;
}

NormalizedFeatures normalize_features(const Matrix& features) {
  NormalizedFeatures out;
  out.scaler = fit_scaler(features);
  out.features = out.scaler.transform(features);
  for (std::size_t j = 0; j < out.scaler.degenerate.size(); ++j) {
    if (out.scaler.degenerate[j]) out.warnings.push_back("column " + std::to_string(j) + " is constant; centered only");
  }
  return out;
}

void SyntheticSpec::validate() const {
  if (classes < 2) throw ConfigError("synthetic: need at least two classes");
  if (samples < classes) throw ConfigError("synthetic: need at least one sample per class");
  if (dim < 1) throw ConfigError("synthetic: dim must be positive");
  if (informative_dims < 1 || informative_dims > dim) throw ConfigError("synthetic: informative_dims must lie in [1, dim]");
  if (classes > (1 << std::min(informative_dims, 20))) {
    throw ConfigError("synthetic: too many classes for the informative sign patterns");
  }
  if (!(noise_scale >= 0.0) || !(separation >= 0.0) || !(target_noise >= 0.0)) {
    throw ConfigError("synthetic: scales must be nonnegative");
  }
}

LabeledDataset generate_labeled(const SyntheticSpec& spec, std::uint64_t stream) {
  spec.validate();
  std::mt19937_64 rng(derive_seed(spec.seed, stream));
  std::normal_distribution<double> normal(0.0, 1.0);
  LabeledDataset data;
  data.features.resize(spec.samples, spec.dim);
  data.labels.resize(static_cast<std::size_t>(spec.samples));
  data.targets.resize(spec.samples);
  int bits = 1;
  while ((1 << bits) < spec.classes) ++bits;
  Vector center(spec.informative_dims);
  for (int i = 0; i < spec.samples; ++i) {
    const int label = i % spec.classes;
    for (int j = 0; j < spec.informative_dims; ++j) {
      center[j] = ((label >> (j % bits)) & 1) ? spec.separation : -spec.separation;
    }
    draw_features(rng, center, spec.informative_dims, spec.noise_scale, data.features.row(i));
    data.labels[static_cast<std::size_t>(i)] = label;
    data.targets[i] = data.features.row(i).head(spec.informative_dims).mean() + spec.target_noise * normal(rng);
  }
  return data;
}

void PanelSpec::validate() const {
  if (assets < 2) throw ConfigError("panel: need at least two assets");
  if (periods < 2) throw ConfigError("panel: need at least two periods");
  if (assets > 100000) throw ConfigError("panel: too many assets");
  if (dim < 1) throw ConfigError("panel: dim must be positive");
  if (informative_dims < 1 || informative_dims > dim) throw ConfigError("panel: informative_dims must lie in [1, dim]");
  if (!(noise_scale >= 0.0) || !(return_noise >= 0.0)) throw ConfigError("panel: scales must be nonnegative");
  if (!std::isfinite(signal)) throw ConfigError("panel: signal must be finite");
}

PanelDataset generate_panel(const PanelSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(derive_seed(spec.seed, stream::kPanel));
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vector center = Vector::Zero(spec.informative_dims);
  PanelDataset data;
  for (int p = 0; p < spec.periods; ++p) {
    PanelPeriod per;
    per.period = p;
    per.features.resize(spec.assets, spec.dim);
    per.next_return.resize(spec.assets);
    for (int a = 0; a < spec.assets; ++a) {
      char id[16];
      std::snprintf(id, sizeof(id), "A%03d", a);
      per.asset_ids.emplace_back(id);
      draw_features(rng, center, spec.informative_dims, spec.noise_scale, per.features.row(a));
      const double s = per.features.row(a).head(spec.informative_dims).mean();
      per.next_return[a] = spec.signal * s + spec.return_noise * normal(rng);
    }
    data.periods.push_back(std::move(per));
  }
  return data;
}

void write_labeled_csv(std::ostream& out, const LabeledDataset& data) {
  if (data.labels.size() != static_cast<std::size_t>(data.features.rows()) || data.targets.size() != data.features.rows()) {
    throw ArgumentError("labeled csv: inconsistent row counts");
  }
  out << "label,target";
  for (Eigen::Index j = 0; j < data.features.cols(); ++j) out << ",f_" << j;
  out << '\n';
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    out << data.labels[static_cast<std::size_t>(i)] << ',' << format_double(data.targets[i]);
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) out << ',' << format_double(data.features(i, j));
    out << '\n';
  }
}

LabeledDataset read_labeled_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("labeled csv: missing header");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "label" || header[1] != "target") {
    throw IoError("labeled csv: header must be label,target,f_0..");
  }
  const std::size_t dim = header.size() - 2;
  std::vector<int> labels;
  std::vector<double> targets;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw IoError("labeled csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                    " fields, expected " + std::to_string(header.size()));
    }
    const double lv = parse_double(cells[0], "labeled csv label");
    if (lv != std::floor(lv) || std::abs(lv) > 1e9) throw IoError("labeled csv: label must be an integer");
    labels.push_back(static_cast<int>(lv));
    targets.push_back(parse_double(cells[1], "labeled csv target"));
    for (std::size_t j = 0; j < dim; ++j) values.push_back(parse_double(cells[2 + j], "labeled csv feature"));
  }
  if (labels.empty()) throw IoError("labeled csv: no data rows");
  LabeledDataset data;
  const auto n = static_cast<Eigen::Index>(labels.size());
  data.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, static_cast<Eigen::Index>(dim));
  data.labels = std::move(labels);
  data.targets = Eigen::Map<const Vector>(targets.data(), n);
  return data;
}

}  // namespace rpd
