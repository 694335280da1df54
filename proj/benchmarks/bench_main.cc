// Copyright 2026 The focalstage Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "focalstage/eval.h"
#include "focalstage/explain.h"
#include "focalstage/loss.h"
#include "focalstage/model.h"
#include "focalstage/train.h"

namespace focalstage {
namespace {

std::vector<double> RandomRow(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = unit(gen);
  return x;
}

void BM_Forward(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const RecurrentModel model = RecurrentModel::Init(8, hidden, 1, 1);
  const std::vector<double> x = RandomRow(8, 2);
  for (auto _ : state) benchmark::DoNotOptimize(model.Predict(x));
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(64);

void BM_ForwardBackward(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const RecurrentModel model = RecurrentModel::Init(8, hidden, 1, 1);
  const std::vector<double> x = RandomRow(8, 2);
  const Stage stage{StageKind::kPower, 2.0, 1, 1};
  const FocalParams params;
  for (auto _ : state) {
    const auto trace = model.Forward(x);
    benchmark::DoNotOptimize(model.Backward(trace, LossGrad(trace.probability, 1, params, stage)));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(16)->Arg(64);

void BM_ExactShapley(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const RecurrentModel model = RecurrentModel::Init(d, 16, 1, 3);
  const Predictor f = MakePredictor(model);
  RowMatrix background(20, static_cast<Eigen::Index>(d));
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index i = 0; i < background.size(); ++i) background.data()[i] = unit(gen);
  const std::vector<double> x = RandomRow(d, 5);
  for (auto _ : state) benchmark::DoNotOptimize(ExactShapley(f, x, background));
}
BENCHMARK(BM_ExactShapley)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  GaussianBenchmarkOptions options;
  options.rows = static_cast<std::size_t>(state.range(0));
  const EncodedMatrix data = MakeGaussianBenchmark(options, 6);
  TrainConfig config;
  config.schedule = ConvexPlan(0.0, 1);
  config.hidden_dim = 16;
  for (auto _ : state) benchmark::DoNotOptimize(Train(data, config));
}
BENCHMARK(BM_TrainEpoch)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace focalstage
