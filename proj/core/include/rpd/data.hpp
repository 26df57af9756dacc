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

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rpd/eval.hpp"
#include "rpd/spd.hpp"

namespace rpd {

/// Per-column mean and population standard deviation fitted on one window
/// and reusable on another. Columns whose std is below 1e-12 are only
/// centered.
struct FeatureScaler {
  Vector mean;
  Vector scale;  // 1 for degenerate columns
  std::vector<bool> degenerate;

  Matrix transform(const Matrix& features) const;
  Vector transform_row(const Vector& row) const;
};

FeatureScaler fit_scaler(const Matrix& features);

struct NormalizedFeatures {
  Matrix features;
  FeatureScaler scaler;
  std::vector<std::string> warnings;
};

/// Zero mean, unit population variance per column. Throws ArgumentError on
/// an empty matrix or fewer than two samples.
NormalizedFeatures normalize_features(const Matrix& features);

struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;
  Vector targets;  // regression target per sample

  Eigen::Index size() const { return features.rows(); }
};

struct SyntheticSpec {
  int classes = 2;
  int samples = 200;
  int dim = 20;
  int informative_dims = 4;
  double noise_scale = 3.0;   // variance multiplier of the distractor dims
  double separation = 0.5;    // class-center offset per informative dim
  double target_noise = 0.25;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Gaussian class clusters separated only in the first informative_dims
/// coordinates. Class k's center is +/- separation per informative dim;
/// with b = ceil(log2 classes), dim j takes its sign from bit (j mod b) of
/// k, so two classes sit at opposite corners. Informative coordinates
/// have unit variance around the center; the remaining coordinates are
/// centered noise with variance noise_scale. Labels cycle through the
/// classes. Targets are the mean of the informative coordinates plus
/// N(0, target_noise^2). `stream` picks an independent draw (train/test).
LabeledDataset generate_labeled(const SyntheticSpec& spec, std::uint64_t stream);

struct PanelSpec {
  int assets = 60;
  int periods = 12;
  int dim = 20;
  int informative_dims = 4;
  double noise_scale = 3.0;
  double signal = 0.03;        // return per unit of the informative factor
  double return_noise = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Features per (period, asset) follow the labeled generator's marginal
/// law without class shifts; next_return = signal * s(x) + noise, where
/// s(x) is the mean of the informative coordinates. Asset ids are
/// zero-padded ("A007") so string order matches numeric order.
PanelDataset generate_panel(const PanelSpec& spec);

/// Columns: label, target, f_0..f_{d-1}.
void write_labeled_csv(std::ostream& out, const LabeledDataset& data);
LabeledDataset read_labeled_csv(std::istream& in);

}  // namespace rpd
