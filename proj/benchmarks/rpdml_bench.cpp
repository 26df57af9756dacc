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

#include <benchmark/benchmark.h>

#include "rpd/data.hpp"
#include "rpd/random.hpp"
#include "rpd/rpdml.hpp"

namespace {

rpd::LabeledDataset dataset(int dim) {
  rpd::SyntheticSpec spec;
  spec.dim = dim;
  spec.seed = 1;
  return rpd::generate_labeled(spec, rpd::stream::kTrainSamples);
}

void BM_InnerSolveW(benchmark::State& state) {
  const auto data = dataset(static_cast<int>(state.range(0)));
  rpd::PairConstraints pc = rpd::build_pairs(data.features, data.labels, 1000, 1);
  pc.u = 1.0;
  pc.l = 2.0;
  const rpd::SpdMatrix w0 = rpd::SpdMatrix::identity(data.features.cols());
  const rpd::DualVector lambda(rpd::Vector::Constant(pc.size(), 1e-4));
  const rpd::RpdmlConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(rpd::inner_solve_w(w0, lambda, w0, 2e-4, pc, cfg));
}
BENCHMARK(BM_InnerSolveW)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_EvalH(benchmark::State& state) {
  const auto data = dataset(static_cast<int>(state.range(0)));
  rpd::PairConstraints pc = rpd::build_pairs(data.features, data.labels, 1000, 1);
  pc.u = 1.0;
  pc.l = 2.0;
  const rpd::SpdMatrix w = rpd::SpdMatrix::identity(data.features.cols());
  const rpd::SlackState xi = rpd::SlackState::zeros(pc.size());
  for (auto _ : state) benchmark::DoNotOptimize(rpd::eval_h(w, xi, pc));
}
BENCHMARK(BM_EvalH)->Arg(10)->Arg(20);

void BM_Train(benchmark::State& state) {
  const auto data = dataset(20);
  rpd::RpdmlConfig cfg;
  cfg.outer_iters = static_cast<int>(state.range(0));
  cfg.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(rpd::train(data.features, data.labels, cfg));
}
BENCHMARK(BM_Train)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace
