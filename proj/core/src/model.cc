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

#include "focalstage/model.h"

#include <algorithm>
#include <cmath>

#include "focalstage/rng.h"

namespace focalstage {
namespace {

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Applies sigmoid to the input/forget/output rows and tanh to the candidate
// rows of a stacked 4h pre-activation vector.
void ActivateGates(Eigen::Ref<Eigen::VectorXd> z, Eigen::Index h) {
  for (Eigen::Index r = 0; r < 3 * h; ++r) z(r) = Sigmoid(z(r));
  for (Eigen::Index r = 3 * h; r < 4 * h; ++r) z(r) = std::tanh(z(r));
}

}  // namespace

RecurrentModel::RecurrentModel(std::size_t input_dim, std::size_t hidden_dim,
                               std::size_t sequence_len)
    : input_dim_(input_dim), hidden_dim_(hidden_dim), sequence_len_(sequence_len) {
  if (input_dim == 0 || hidden_dim == 0 || sequence_len == 0) {
    throw InvalidArgument("model dimensions must be >= 1");
  }
  params_.assign(ParameterCount(input_dim, hidden_dim), 0.0);
}

std::size_t RecurrentModel::ParameterCount(std::size_t input_dim, std::size_t hidden_dim) {
  const std::size_t h = hidden_dim;
  return 4 * h * (input_dim + h) + 4 * h + h + 1;
}

RecurrentModel RecurrentModel::Init(std::size_t input_dim, std::size_t hidden_dim,
                                    std::size_t sequence_len, std::uint64_t seed) {
  RecurrentModel model(input_dim, hidden_dim, sequence_len);
  Rng rng(seed);
  const double gate_scale =
      std::sqrt(6.0 / static_cast<double>(model.joint_dim() + hidden_dim));
  for (Gate gate : {Gate::kInput, Gate::kForget, Gate::kOutput, Gate::kCandidate}) {
    auto w = model.GateWeights(gate);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w.data()[i] = rng.Uniform(-gate_scale, gate_scale);
    }
  }
  model.GateBias(Gate::kForget).setOnes();
  const double head_scale = std::sqrt(6.0 / static_cast<double>(hidden_dim + 1));
  auto head = model.HeadWeights();
  for (Eigen::Index i = 0; i < head.size(); ++i) head(i) = rng.Uniform(-head_scale, head_scale);
  return model;
}

std::vector<ParameterBlock> RecurrentModel::Blocks() const {
  const std::size_t h = hidden_dim_, j = joint_dim();
  std::vector<ParameterBlock> blocks;
  const char* weight_names[] = {"W_i", "W_f", "W_o", "W_g"};
  const char* bias_names[] = {"b_i", "b_f", "b_o", "b_g"};
  for (std::size_t g = 0; g < 4; ++g) {
    blocks.push_back({weight_names[g], h, j, gate_weights_offset() + g * h * j});
  }
  for (std::size_t g = 0; g < 4; ++g) {
    blocks.push_back({bias_names[g], h, 1, gate_bias_offset() + g * h});
  }
  blocks.push_back({"head_w", h, 1, head_offset()});
  blocks.push_back({"head_b", 1, 1, head_offset() + h});
  return blocks;
}

Eigen::Map<RowMatrix> RecurrentModel::GateWeights(Gate gate) {
  const auto g = static_cast<std::size_t>(gate);
  return {params_.data() + g * hidden_dim_ * joint_dim(),
          static_cast<Eigen::Index>(hidden_dim_), static_cast<Eigen::Index>(joint_dim())};
}
Eigen::Map<const RowMatrix> RecurrentModel::GateWeights(Gate gate) const {
  const auto g = static_cast<std::size_t>(gate);
  return {params_.data() + g * hidden_dim_ * joint_dim(),
          static_cast<Eigen::Index>(hidden_dim_), static_cast<Eigen::Index>(joint_dim())};
}
Eigen::Map<Eigen::VectorXd> RecurrentModel::GateBias(Gate gate) {
  const auto g = static_cast<std::size_t>(gate);
  return {params_.data() + gate_bias_offset() + g * hidden_dim_,
          static_cast<Eigen::Index>(hidden_dim_)};
}
Eigen::Map<const Eigen::VectorXd> RecurrentModel::GateBias(Gate gate) const {
  const auto g = static_cast<std::size_t>(gate);
  return {params_.data() + gate_bias_offset() + g * hidden_dim_,
          static_cast<Eigen::Index>(hidden_dim_)};
}
Eigen::Map<Eigen::VectorXd> RecurrentModel::HeadWeights() {
  return {params_.data() + head_offset(), static_cast<Eigen::Index>(hidden_dim_)};
}
Eigen::Map<const Eigen::VectorXd> RecurrentModel::HeadWeights() const {
  return {params_.data() + head_offset(), static_cast<Eigen::Index>(hidden_dim_)};
}

void RecurrentModel::CheckInput(std::span<const double> sequence) const {
  if (sequence.size() != sequence_len_ * input_dim_) {
    throw InvalidArgument("sequence has " + std::to_string(sequence.size()) +
                          " values, model expects T*d = " +
                          std::to_string(sequence_len_) + "*" + std::to_string(input_dim_));
  }
}

ForwardTrace RecurrentModel::Forward(std::span<const double> sequence, double epsilon) const {
  CheckInput(sequence);
  const auto h = static_cast<Eigen::Index>(hidden_dim_);
  const auto d = static_cast<Eigen::Index>(input_dim_);
  const Eigen::Map<const RowMatrix> weights(params_.data(), 4 * h, d + h);
  const Eigen::Map<const Eigen::VectorXd> bias(params_.data() + gate_bias_offset(), 4 * h);

  ForwardTrace trace;
  trace.epsilon = epsilon;
  trace.steps.resize(sequence_len_);
  Eigen::VectorXd hidden = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd cell = Eigen::VectorXd::Zero(h);
  for (std::size_t t = 0; t < sequence_len_; ++t) {
    StepTrace& step = trace.steps[t];
    step.joint_input.resize(d + h);
    for (Eigen::Index k = 0; k < d; ++k) {
      step.joint_input(k) = sequence[t * input_dim_ + static_cast<std::size_t>(k)];
    }
    step.joint_input.tail(h) = hidden;
    step.gates = weights * step.joint_input + bias;
    ActivateGates(step.gates, h);
    cell = step.gates.segment(h, h).cwiseProduct(cell) +
           step.gates.head(h).cwiseProduct(step.gates.tail(h));
    step.cell = cell;
    step.cell_tanh = cell.array().tanh();
    hidden = step.gates.segment(2 * h, h).cwiseProduct(step.cell_tanh);
    step.hidden = hidden;
  }
  trace.logit = HeadWeights().dot(hidden) + HeadBias();
  trace.raw_probability = Sigmoid(trace.logit);
  trace.probability = ClampProbability(trace.raw_probability, epsilon);
  return trace;
}

double RecurrentModel::Predict(std::span<const double> sequence, double epsilon) const {
  CheckInput(sequence);
  const auto h = static_cast<Eigen::Index>(hidden_dim_);
  const auto d = static_cast<Eigen::Index>(input_dim_);
  const Eigen::Map<const RowMatrix> weights(params_.data(), 4 * h, d + h);
  const Eigen::Map<const Eigen::VectorXd> bias(params_.data() + gate_bias_offset(), 4 * h);

  Eigen::VectorXd joint(d + h);
  Eigen::VectorXd gates(4 * h);
  Eigen::VectorXd cell = Eigen::VectorXd::Zero(h);
  joint.tail(h).setZero();
  for (std::size_t t = 0; t < sequence_len_; ++t) {
    for (Eigen::Index k = 0; k < d; ++k) {
      joint(k) = sequence[t * input_dim_ + static_cast<std::size_t>(k)];
    }
    gates.noalias() = weights * joint;
    gates += bias;
    ActivateGates(gates, h);
    cell = gates.segment(h, h).cwiseProduct(cell) + gates.head(h).cwiseProduct(gates.tail(h));
    joint.tail(h) = gates.segment(2 * h, h).cwiseProduct(cell.array().tanh().matrix());
  }
  const double logit = HeadWeights().dot(joint.tail(h)) + HeadBias();
  return ClampProbability(Sigmoid(logit), epsilon);
}

std::vector<double> RecurrentModel::Backward(const ForwardTrace& trace, double dloss_dp) const {
  std::vector<double> grad(params_.size(), 0.0);
  AccumulateBackward(trace, dloss_dp, grad);
  return grad;
}

void RecurrentModel::AccumulateBackward(const ForwardTrace& trace, double dloss_dp,
                                        std::span<double> grad) const {
  if (grad.size() != params_.size()) {
    throw InvalidArgument("gradient buffer size does not match parameter count");
  }
  if (trace.steps.size() != sequence_len_) {
    throw InvalidArgument("trace was not produced by this model");
  }
  const auto h = static_cast<Eigen::Index>(hidden_dim_);
  const auto d = static_cast<Eigen::Index>(input_dim_);
  const Eigen::Map<const RowMatrix> weights(params_.data(), 4 * h, d + h);
  Eigen::Map<RowMatrix> grad_weights(grad.data(), 4 * h, d + h);
  Eigen::Map<Eigen::VectorXd> grad_bias(grad.data() + gate_bias_offset(), 4 * h);
  Eigen::Map<Eigen::VectorXd> grad_head(grad.data() + head_offset(), h);

  // The clamp is flat outside [epsilon, 1 - epsilon].
  const double p = trace.raw_probability;
  const bool clamped = p < trace.epsilon || p > 1.0 - trace.epsilon;
  const double dlogit = clamped ? 0.0 : dloss_dp * p * (1.0 - p);

  const StepTrace& last = trace.steps.back();
  grad_head += dlogit * last.hidden;
  grad[head_offset() + hidden_dim_] += dlogit;

  Eigen::VectorXd dhidden = dlogit * HeadWeights();
  Eigen::VectorXd dcell = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd dz(4 * h);
  for (std::size_t t = sequence_len_; t-- > 0;) {
    const StepTrace& step = trace.steps[t];
    const auto in = step.gates.head(h);
    const auto forget = step.gates.segment(h, h);
    const auto out = step.gates.segment(2 * h, h);
    const auto cand = step.gates.tail(h);

    const Eigen::ArrayXd tanh_c = step.cell_tanh.array();
    dcell.array() += dhidden.array() * out.array() * (1.0 - tanh_c.square());
    Eigen::ArrayXd prev_cell = Eigen::ArrayXd::Zero(h);
    if (t > 0) prev_cell = trace.steps[t - 1].cell.array();

    dz.head(h).array() = dcell.array() * cand.array() * in.array() * (1.0 - in.array());
    dz.segment(h, h).array() =
        dcell.array() * prev_cell * forget.array() * (1.0 - forget.array());
    dz.segment(2 * h, h).array() =
        dhidden.array() * tanh_c * out.array() * (1.0 - out.array());
    dz.tail(h).array() = dcell.array() * in.array() * (1.0 - cand.array().square());

    grad_weights.noalias() += dz * step.joint_input.transpose();
    grad_bias += dz;

    const Eigen::VectorXd djoint = weights.transpose() * dz;
    dhidden = djoint.tail(h);
    dcell.array() *= forget.array();
  }
}

bool RecurrentModel::AllFinite() const {
  return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace focalstage
