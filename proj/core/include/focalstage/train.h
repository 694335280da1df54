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

#ifndef FOCALSTAGE_TRAIN_H_
#define FOCALSTAGE_TRAIN_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "focalstage/dataio.h"
#include "focalstage/loss.h"
#include "focalstage/model.h"

namespace focalstage {

enum class OptimizerKind { kSgd, kAdam };
std::string_view OptimizerName(OptimizerKind kind);
OptimizerKind ParseOptimizer(std::string_view name);

enum class AlphaMode {
  // Recomputed from the class counts of the training matrix.
  kInverseFrequency,
  // FocalParams::alpha_pos / alpha_neg as given.
  kConstant,
};

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  SchedulePlan schedule = MultistagePlan();
  AlphaMode alpha_mode = AlphaMode::kInverseFrequency;
  // alpha constants (kConstant only) and epsilon.
  FocalParams focal;
  std::size_t hidden_dim = 16;
  // Rows hold sequence_len * d values; 1 for tabular data.
  std::size_t sequence_len = 1;
  // Stop after this many epochs without a lower mean training loss.
  // 0 disables early stopping.
  int patience = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  int total_epochs() const { return schedule.total_epochs(); }
  // Throws InvalidArgument on an invalid setting.
  void Validate() const;
};

struct EpochLog {
  int epoch = 0;
  Stage stage;
  double mean_loss = 0.0;
  // Fraction of rows classified correctly at 0.5, measured on the
  // predictions made during the epoch.
  double train_accuracy = 0.0;
};

struct StageCheckpoint {
  // The stage that just finished.
  Stage stage;
  int epoch = 0;
  RecurrentModel model;
};

struct TrainResult {
  RecurrentModel model;
  std::vector<EpochLog> logs;
  // Model snapshot at the end of every stage, in order.
  std::vector<StageCheckpoint> checkpoints;
  FocalParams focal;
};

// Adam or plain SGD over the flat parameter vector.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, std::size_t num_parameters, double learning_rate,
            double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
  void Step(std::span<double> params, std::span<const double> grad);

 private:
  OptimizerKind kind_;
  double learning_rate_;
  double beta1_, beta2_, epsilon_;
  std::vector<double> m_, v_;
  std::uint64_t step_ = 0;
};

// Resolves alpha_t for a training matrix under the configured mode.
FocalParams ResolveFocalParams(const EncodedMatrix& matrix, const TrainConfig& config);

// Trains a freshly initialized model on every row of `matrix`. Throws
// TrainingError naming the epoch and batch if the loss becomes non-finite.
TrainResult Train(const EncodedMatrix& matrix, const TrainConfig& config);

// Continues training an existing model; the model's dimensions must match.
TrainResult TrainModel(RecurrentModel model, const EncodedMatrix& matrix,
                       const TrainConfig& config);

// Predicted probabilities for every row.
std::vector<double> PredictAll(const RecurrentModel& model, const RowMatrix& values);

// Mean stage loss of a model's predictions.
double MeanLoss(const std::vector<double>& probs, const std::vector<int>& labels,
                const FocalParams& params, const Stage& stage);

// CSV: epoch,stage,mean_loss,train_accuracy
void WriteEpochLogCsv(const std::vector<EpochLog>& logs, std::ostream& out);

}  // namespace focalstage

#endif  // FOCALSTAGE_TRAIN_H_
