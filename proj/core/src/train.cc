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
#include <cstdio>
#include <limits>
#include <numeric>

#include "focalstage/rng.h"

namespace focalstage {

std::string_view OptimizerName(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind ParseOptimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw InvalidArgument("unknown optimizer '" + std::string(name) + "' (expected adam or sgd)");
}

void TrainConfig::Validate() const {
  schedule.Validate();
  focal.Validate();
  // A zero rate is accepted: it is the null-update configuration.
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning rate must be finite and >= 0");
  }
  if (batch_size == 0) throw InvalidArgument("batch size must be >= 1");
  if (hidden_dim == 0) throw InvalidArgument("hidden size must be >= 1");
  if (sequence_len == 0) throw InvalidArgument("sequence length must be >= 1");
  if (patience < 0) throw InvalidArgument("patience must be >= 0");
}

Optimizer::Optimizer(OptimizerKind kind, std::size_t num_parameters, double learning_rate,
                     double beta1, double beta2, double epsilon)
    : kind_(kind),
      learning_rate_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon) {
  if (kind_ == OptimizerKind::kAdam) {
    m_.assign(num_parameters, 0.0);
    v_.assign(num_parameters, 0.0);
  }
}

void Optimizer::Step(std::span<double> params, std::span<const double> grad) {
  if (kind_ == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= learning_rate_ * grad[i];
    return;
  }
  ++step_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double m_hat = m_[i] / correction1;
    const double v_hat = v_[i] / correction2;
    params[i] -= learning_rate_ * m_hat / (std::sqrt(v_hat) + epsilon_);
  }
}

FocalParams ResolveFocalParams(const EncodedMatrix& matrix, const TrainConfig& config) {
  if (config.alpha_mode == AlphaMode::kConstant) return config.focal;
  FocalParams params = InverseFrequencyAlpha(matrix.CountLabel(1), matrix.CountLabel(0));
  params.epsilon = config.focal.epsilon;
  return params;
}

std::vector<double> PredictAll(const RecurrentModel& model, const RowMatrix& values) {
  std::vector<double> probs(static_cast<std::size_t>(values.rows()));
  const auto cols = static_cast<std::size_t>(values.cols());
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    probs[static_cast<std::size_t>(i)] =
        model.Predict(std::span<const double>(values.row(i).data(), cols));
  }
  return probs;
}

double MeanLoss(const std::vector<double>& probs, const std::vector<int>& labels,
                const FocalParams& params, const Stage& stage) {
  if (probs.size() != labels.size()) throw InvalidArgument("probability/label size mismatch");
  if (probs.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    total += StageLoss(probs[i], labels[i], params, stage);
  }
  return total / static_cast<double>(probs.size());
}

TrainResult Train(const EncodedMatrix& matrix, const TrainConfig& config) {
  config.Validate();
  if (matrix.num_features() % config.sequence_len != 0) {
    throw InvalidArgument("row width " + std::to_string(matrix.num_features()) +
                          " is not a multiple of sequence length " +
                          std::to_string(config.sequence_len));
  }
  const std::size_t input_dim = matrix.num_features() / config.sequence_len;
  return TrainModel(
      RecurrentModel::Init(input_dim, config.hidden_dim, config.sequence_len, config.seed),
      matrix, config);
}

TrainResult TrainModel(RecurrentModel model, const EncodedMatrix& matrix,
                       const TrainConfig& config) {
  config.Validate();
  if (matrix.CountLabel(0) == 0 || matrix.CountLabel(1) == 0) {
    throw InvalidArgument("training needs at least one row of each class");
  }
  if (model.input_dim() * model.sequence_len() != matrix.num_features()) {
    throw InvalidArgument("model expects rows of " +
                          std::to_string(model.input_dim() * model.sequence_len()) +
                          " values, matrix has " + std::to_string(matrix.num_features()));
  }

  const FocalParams focal = ResolveFocalParams(matrix, config);
  const std::size_t n = matrix.num_rows();
  const auto width = static_cast<std::size_t>(matrix.values.cols());

  // The shuffle stream is kept apart from the initialization stream.
  Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  Optimizer optimizer(config.optimizer, model.num_parameters(), config.learning_rate,
                      config.adam_beta1, config.adam_beta2, config.adam_epsilon);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(model.num_parameters());

  TrainResult result{model, {}, {}, focal};
  double best_loss = std::numeric_limits<double>::infinity();
  int epochs_without_improvement = 0;

  for (int epoch = 1; epoch <= config.total_epochs(); ++epoch) {
    const Stage& stage = config.schedule.StageForEpoch(epoch);
    rng.Shuffle(order);

    double epoch_loss = 0.0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const auto row = static_cast<Eigen::Index>(order[b]);
        const int y = matrix.labels[order[b]];
        const ForwardTrace trace = model.Forward(
            std::span<const double>(matrix.values.row(row).data(), width), focal.epsilon);
        batch_loss += StageLoss(trace.probability, y, focal, stage);
        if ((trace.probability >= 0.5 ? 1 : 0) == y) ++correct;
        model.AccumulateBackward(trace, scale * LossGrad(trace.probability, y, focal, stage),
                                 grad);
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index + 1));
      }
      epoch_loss += batch_loss;
      optimizer.Step(model.parameters(), grad);
      if (!model.AllFinite()) {
        throw TrainingError("non-finite parameters after epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_index + 1));
      }
    }

    EpochLog log;
    log.epoch = epoch;
    log.stage = stage;
    log.mean_loss = epoch_loss / static_cast<double>(n);
    log.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    result.logs.push_back(log);

    if (epoch == stage.last_epoch) result.checkpoints.push_back({stage, epoch, model});

    if (config.patience > 0) {
      if (log.mean_loss < best_loss) {
        best_loss = log.mean_loss;
        epochs_without_improvement = 0;
      } else if (++epochs_without_improvement >= config.patience) {
        if (epoch != stage.last_epoch) result.checkpoints.push_back({stage, epoch, model});
        break;
      }
    }
  }
  result.model = std::move(model);
  return result;
}

void WriteEpochLogCsv(const std::vector<EpochLog>& logs, std::ostream& out) {
  out << "epoch,stage,mean_loss,train_accuracy\n";
  char buf[128];
  for (const auto& log : logs) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%.8f,%.6f\n", log.epoch, log.stage.Label().c_str(),
                  log.mean_loss, log.train_accuracy);
    out << buf;
  }
}

}  // namespace focalstage
