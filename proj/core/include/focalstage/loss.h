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

#ifndef FOCALSTAGE_LOSS_H_
#define FOCALSTAGE_LOSS_H_

#include <string>
#include <string_view>
#include <vector>

namespace focalstage {

// Probability clamp applied before every log.
inline constexpr double kDefaultEpsilon = 1e-7;

struct FocalParams {
  // alpha_t for y = 1 and y = 0.
  double alpha_pos = 1.0;
  double alpha_neg = 1.0;
  // Focusing parameter. For the convex loss this is the gamma in the
  // (1 - gamma * p_t) modulator and must be <= 1.
  double gamma = 0.0;
  double epsilon = kDefaultEpsilon;

  double alpha(int y) const { return y == 1 ? alpha_pos : alpha_neg; }
  // Throws InvalidArgument unless epsilon in (0, 0.01), gamma >= 0 and both
  // alphas >= 0.
  void Validate() const;
};

// alpha_t from class counts: inverse class frequency, normalized so that
// alpha_pos + alpha_neg = 2.
FocalParams InverseFrequencyAlpha(std::size_t positives, std::size_t negatives);

double ClampProbability(double p, double epsilon = kDefaultEpsilon);

// Probability assigned to the true class: p for y = 1, 1 - p for y = 0.
// The input p is clamped into [epsilon, 1 - epsilon] first.
double TrueClassProbability(double p, int y, double epsilon = kDefaultEpsilon);

// -alpha_t (1 - gamma p_t) log p_t. Throws InvalidArgument if gamma > 1.
double ConvexLoss(double p, int y, const FocalParams& params);

// -alpha_t (1 - p_t)^exponent log p_t.
double PowerLoss(double p, int y, const FocalParams& params, double exponent);

// alpha_t-weighted binary cross-entropy, -alpha_t log p_t.
double WeightedCrossEntropy(double p, int y, const FocalParams& params);

// Second derivative of -(1 - gamma p) log p in p: gamma/p + 1/p^2.
double ConvexSecondDerivative(double p, double gamma);

enum class StageKind { kConvex, kPower };

std::string_view StageKindName(StageKind kind);

// One contiguous block of epochs trained with one loss.
struct Stage {
  StageKind kind = StageKind::kConvex;
  // gamma for a convex stage, exponent for a power stage.
  double value = 0.0;
  int first_epoch = 1;
  int last_epoch = 1;

  // "convex(0)" / "power(2)".
  std::string Label() const;
  bool SameLoss(const Stage& other) const {
    return kind == other.kind && value == other.value;
  }
};

// Loss of one sample under a stage. params.gamma is ignored; the stage's
// value supplies gamma or the exponent.
double StageLoss(double p, int y, const FocalParams& params, const Stage& stage);

// dLoss/dp (derivative with respect to p, not p_t) at the clamped p. The
// clamp itself is not differentiated.
double LossGrad(double p, int y, const FocalParams& params, const Stage& stage);

struct SchedulePlan {
  std::string name;
  std::vector<Stage> stages;

  int total_epochs() const { return stages.empty() ? 0 : stages.back().last_epoch; }
  // Throws InvalidArgument unless the stages tile [1, total_epochs] in order
  // with no gaps or overlaps, and convex stages have gamma in [0, 1].
  void Validate() const;
  // Throws InvalidArgument for an epoch outside [1, total_epochs].
  const Stage& StageForEpoch(int epoch) const;
  const Stage& final_stage() const { return stages.back(); }
  // Stage lines "<kind>:<value>:<first>-<last>" joined by ','.
  std::string Describe() const;
};

// Convex(gamma = convex_gamma) for epochs 1..convex_cutoff, then power with
// exponent final_gamma / 2 through intermediate_cutoff, then power with
// final_gamma through total_epochs.
SchedulePlan MultistagePlan(double final_gamma = 4.0, int convex_cutoff = 10,
                            int intermediate_cutoff = 50, int total_epochs = 100,
                            double convex_gamma = 0.0);
SchedulePlan ConvexPlan(double gamma = 0.0, int total_epochs = 100);
SchedulePlan NonconvexPlan(double gamma, int total_epochs = 100);

// Parses one stage line "<kind>:<value>:<first>-<last>", kind being
// "convex" or "power".
Stage ParseStage(std::string_view text);

}  // namespace focalstage

#endif  // FOCALSTAGE_LOSS_H_
