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

#include "focalstage/train.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "focalstage/common.h"
#include "focalstage/eval.h"

namespace focalstage {
namespace {

// Two well-separated Gaussian blobs in two features.
EncodedMatrix Separable(std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  RowMatrix raw(static_cast<Eigen::Index>(rows), 2);
  std::vector<int> labels(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const int y = i % 3 == 0 ? 1 : 0;
    const double centre = y == 1 ? 2.0 : -2.0;
    raw(static_cast<Eigen::Index>(i), 0) = centre + noise(gen);
    raw(static_cast<Eigen::Index>(i), 1) = -centre + noise(gen);
    labels[i] = y;
  }
  return FromNumeric(raw, labels);
}

TrainConfig SmallConfig(int epochs) {
  TrainConfig config;
  config.schedule = MultistagePlan(4.0, epochs / 10, epochs / 2, epochs);
  config.hidden_dim = 4;
  config.learning_rate = 0.01;
  config.seed = 3;
  return config;
}

TEST(Optimizer, AdamFirstStepMovesByLearningRate) {
  Optimizer adam(OptimizerKind::kAdam, 2, 0.1);
  std::vector<double> params = {1.0, -1.0};
  const std::vector<double> grad = {4.0, -0.5};
  adam.Step(params, grad);
  // Bias-corrected first step is lr * g / (|g| + eps').
  EXPECT_NEAR(params[0], 0.9, 1e-8);
  EXPECT_NEAR(params[1], -0.9, 1e-7);
}

TEST(Optimizer, SgdStep) {
  Optimizer sgd(OptimizerKind::kSgd, 2, 0.5);
  std::vector<double> params = {1.0, 2.0};
  sgd.Step(params, std::vector<double>{2.0, -4.0});
  EXPECT_DOUBLE_EQ(params[0], 0.0);
  EXPECT_DOUBLE_EQ(params[1], 4.0);
}

TEST(Optimizer, Names) {
  EXPECT_EQ(ParseOptimizer("adam"), OptimizerKind::kAdam);
  EXPECT_EQ(ParseOptimizer(OptimizerName(OptimizerKind::kSgd)), OptimizerKind::kSgd);
  EXPECT_THROW(ParseOptimizer("rmsprop"), InvalidArgument);
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  const EncodedMatrix data = Separable(60, 1);
  TrainConfig config = SmallConfig(10);
  config.learning_rate = 0.0;
  const TrainResult result = Train(data, config);
  const RecurrentModel initial = RecurrentModel::Init(2, 4, 1, config.seed);
  EXPECT_TRUE(std::equal(initial.parameters().begin(), initial.parameters().end(),
                         result.model.parameters().begin()));
}

TEST(Train, SeparatesWellSeparatedBlobs) {
  const EncodedMatrix data = Separable(300, 2);
  TrainConfig config = SmallConfig(100);
  config.hidden_dim = 8;
  const TrainResult result = Train(data, config);
  EXPECT_GE(result.logs.back().train_accuracy, 0.95);
  const auto probs = PredictAll(result.model, data.values);
  EXPECT_GE(ComputeClassificationMetrics(probs, data.labels).accuracy, 0.95);
}

TEST(Train, DefaultScheduleStageSequence) {
  const EncodedMatrix data = Separable(40, 3);
  TrainConfig config;
  config.hidden_dim = 2;
  const TrainResult result = Train(data, config);
  ASSERT_EQ(result.logs.size(), 100u);
  for (const EpochLog& log : result.logs) {
    EXPECT_EQ(log.stage.Label(), config.schedule.StageForEpoch(log.epoch).Label());
    const char* expected = log.epoch <= 10 ? "convex(0)" : log.epoch <= 50 ? "power(2)" : "power(4)";
    EXPECT_EQ(log.stage.Label(), expected) << "epoch " << log.epoch;
  }
  ASSERT_EQ(result.checkpoints.size(), 3u);
  EXPECT_EQ(result.checkpoints[0].epoch, 10);
  EXPECT_EQ(result.checkpoints[1].epoch, 50);
  EXPECT_EQ(result.checkpoints[2].epoch, 100);
  EXPECT_TRUE(std::equal(result.checkpoints[2].model.parameters().begin(),
                         result.checkpoints[2].model.parameters().end(),
                         result.model.parameters().begin()));
}

TEST(Train, BitwiseDeterministic) {
  const EncodedMatrix data = Separable(70, 4);
  const TrainConfig config = SmallConfig(20);
  const TrainResult a = Train(data, config);
  const TrainResult b = Train(data, config);
  EXPECT_TRUE(std::equal(a.model.parameters().begin(), a.model.parameters().end(),
                         b.model.parameters().begin()));
  std::ostringstream la, lb;
  WriteEpochLogCsv(a.logs, la);
  WriteEpochLogCsv(b.logs, lb);
  EXPECT_EQ(la.str(), lb.str());
}

TEST(Train, FirstStageLossNonIncreasingWhenSmoothed) {
  const EncodedMatrix data = Separable(200, 5);
  TrainConfig config = SmallConfig(100);
  config.schedule = MultistagePlan(4.0, 30, 60, 100);
  const TrainResult result = Train(data, config);
  std::vector<double> smoothed;
  for (int e = 0; e + 3 <= 30; ++e) {
    smoothed.push_back((result.logs[e].mean_loss + result.logs[e + 1].mean_loss +
                        result.logs[e + 2].mean_loss) / 3.0);
  }
  for (std::size_t i = 1; i < smoothed.size(); ++i) {
    EXPECT_LE(smoothed[i], smoothed[i - 1] + 1e-12) << "window " << i;
  }
}

TEST(Train, StageSwitchKeepsParametersContinuous) {
  // Training 10 epochs of a two-stage plan equals training the first stage,
  // then continuing from that model under the second stage alone.
  const EncodedMatrix data = Separable(64, 6);
  TrainConfig config = SmallConfig(10);
  config.optimizer = OptimizerKind::kSgd;
  config.schedule.name = "two";
  config.schedule.stages = {{StageKind::kConvex, 0.0, 1, 5}, {StageKind::kPower, 2.0, 6, 10}};
  const TrainResult full = Train(data, config);
  const RecurrentModel& at_switch = full.checkpoints.front().model;
  EXPECT_EQ(full.checkpoints.front().epoch, 5);
  // The first post-switch epoch starts from the stage-one snapshot.
  TrainConfig first = config;
  first.schedule.stages = {{StageKind::kConvex, 0.0, 1, 5}};
  const TrainResult partial = Train(data, first);
  EXPECT_TRUE(std::equal(partial.model.parameters().begin(), partial.model.parameters().end(),
                         at_switch.parameters().begin()));
}

TEST(Train, PatienceStopsEarly) {
  const EncodedMatrix data = Separable(64, 7);
  TrainConfig config = SmallConfig(100);
  config.learning_rate = 0.0;
  config.patience = 3;
  const TrainResult result = Train(data, config);
  EXPECT_LT(result.logs.size(), 100u);
}

TEST(Train, RejectsSingleClassAndBadConfig) {
  EncodedMatrix data = Separable(30, 8);
  TrainConfig config = SmallConfig(10);
  config.batch_size = 0;
  EXPECT_THROW(Train(data, config), InvalidArgument);
  config = SmallConfig(10);
  config.learning_rate = -1.0;
  EXPECT_THROW(Train(data, config), InvalidArgument);
  std::fill(data.labels.begin(), data.labels.end(), 0);
  EXPECT_THROW(Train(data, SmallConfig(10)), InvalidArgument);
}

TEST(Train, NonFiniteInputAbortsWithLocation) {
  EncodedMatrix data = Separable(40, 9);
  data.values(5, 0) = std::nan("");
  try {
    Train(data, SmallConfig(10));
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("epoch"), std::string::npos) << what;
    EXPECT_NE(what.find("batch"), std::string::npos) << what;
  }
}

TEST(ResolveFocalParams, InverseFrequencyAndConstant) {
  const EncodedMatrix data = Separable(30, 10);  // 10 positives, 20 negatives
  TrainConfig config;
  FocalParams p = ResolveFocalParams(data, config);
  EXPECT_NEAR(p.alpha_pos, 2.0 * 20 / 30, 1e-15);
  EXPECT_NEAR(p.alpha_neg, 2.0 * 10 / 30, 1e-15);
  config.alpha_mode = AlphaMode::kConstant;
  config.focal.alpha_pos = 0.25;
  config.focal.alpha_neg = 0.75;
  p = ResolveFocalParams(data, config);
  EXPECT_EQ(p.alpha_pos, 0.25);
  EXPECT_EQ(p.alpha_neg, 0.75);
}

TEST(WriteEpochLogCsv, Format) {
  EpochLog log;
  log.epoch = 1;
  log.stage = {StageKind::kConvex, 0.0, 1, 10};
  log.mean_loss = 0.5;
  log.train_accuracy = 0.75;
  std::ostringstream out;
  WriteEpochLogCsv({log}, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "epoch,stage,mean_loss,train_accuracy");
  EXPECT_NE(out.str().find("1,convex(0),"), std::string::npos);
}

}  // namespace
}  // namespace focalstage
