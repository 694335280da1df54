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

#ifndef FOCALSTAGE_MODEL_H_
#define FOCALSTAGE_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "focalstage/common.h"
#include "focalstage/loss.h"

namespace focalstage {

enum class Gate { kInput = 0, kForget = 1, kOutput = 2, kCandidate = 3 };

// A named slice of the flat parameter vector.
struct ParameterBlock {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return rows * cols; }
};

// Activations of one timestep, kept for backpropagation.
struct StepTrace {
  // [x_t; h_{t-1}]
  Eigen::VectorXd joint_input;
  // Activated gates stacked as input, forget, output, candidate.
  Eigen::VectorXd gates;
  Eigen::VectorXd cell;
  Eigen::VectorXd cell_tanh;
  Eigen::VectorXd hidden;
};

struct ForwardTrace {
  std::vector<StepTrace> steps;
  double logit = 0.0;
  double raw_probability = 0.5;
  // raw_probability clamped into [epsilon, 1 - epsilon].
  double probability = 0.5;
  double epsilon = kDefaultEpsilon;
};

// Single-layer LSTM over a (T x d) sequence followed by a sigmoid head on
// the last hidden state. All parameters live in one flat vector laid out as
// W_i, W_f, W_o, W_g (each h x (d + h), row-major), b_i, b_f, b_o, b_g,
// head_w (h), head_b.
class RecurrentModel {
 public:
  // All-zero parameters.
  RecurrentModel(std::size_t input_dim, std::size_t hidden_dim, std::size_t sequence_len);

  // Glorot-uniform weights, forget bias 1, other biases 0.
  static RecurrentModel Init(std::size_t input_dim, std::size_t hidden_dim,
                             std::size_t sequence_len, std::uint64_t seed);

  static std::size_t ParameterCount(std::size_t input_dim, std::size_t hidden_dim);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::size_t sequence_len() const { return sequence_len_; }
  std::size_t num_parameters() const { return params_.size(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::vector<ParameterBlock> Blocks() const;

  // Views into the parameter vector.
  Eigen::Map<RowMatrix> GateWeights(Gate gate);
  Eigen::Map<const RowMatrix> GateWeights(Gate gate) const;
  Eigen::Map<Eigen::VectorXd> GateBias(Gate gate);
  Eigen::Map<const Eigen::VectorXd> GateBias(Gate gate) const;
  Eigen::Map<Eigen::VectorXd> HeadWeights();
  Eigen::Map<const Eigen::VectorXd> HeadWeights() const;
  double& HeadBias() { return params_.back(); }
  double HeadBias() const { return params_.back(); }

  // `sequence` holds T * d values, timestep-major. Throws InvalidArgument
  // on a size mismatch.
  ForwardTrace Forward(std::span<const double> sequence,
                       double epsilon = kDefaultEpsilon) const;
  // Clamped probability without keeping a trace.
  double Predict(std::span<const double> sequence,
                 double epsilon = kDefaultEpsilon) const;

  // Gradient of a scalar loss with respect to every parameter, given
  // dLoss/dp for the traced forward pass.
  std::vector<double> Backward(const ForwardTrace& trace, double dloss_dp) const;
  // Adds the gradient into `grad` (size num_parameters()).
  void AccumulateBackward(const ForwardTrace& trace, double dloss_dp,
                          std::span<double> grad) const;

  bool AllFinite() const;

 private:
  std::size_t gate_weights_offset() const { return 0; }
  std::size_t gate_bias_offset() const { return 4 * hidden_dim_ * joint_dim(); }
  std::size_t head_offset() const { return gate_bias_offset() + 4 * hidden_dim_; }
  std::size_t joint_dim() const { return input_dim_ + hidden_dim_; }
  void CheckInput(std::span<const double> sequence) const;

  std::size_t input_dim_;
  std::size_t hidden_dim_;
  std::size_t sequence_len_;
  std::vector<double> params_;
};

}  // namespace focalstage

#endif  // FOCALSTAGE_MODEL_H_
