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

#include "focalstage/loss.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "focalstage/common.h"

namespace focalstage {
namespace {

std::string FormatValue(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// Derivative of the stage loss with respect to p_t.
double GradWrtTrueClass(double pt, double alpha, const Stage& stage) {
  const double log_pt = std::log(pt);
  if (stage.kind == StageKind::kConvex) {
    const double gamma = stage.value;
    return alpha * (gamma * log_pt - (1.0 - gamma * pt) / pt);
  }
  const double exponent = stage.value;
  const double q = 1.0 - pt;
  const double focus_term =
      exponent == 0.0 ? 0.0 : exponent * std::pow(q, exponent - 1.0) * log_pt;
  return alpha * (focus_term - std::pow(q, exponent) / pt);
}

}  // namespace

void FocalParams::Validate() const {
  if (!(epsilon > 0.0 && epsilon < 0.01)) {
    throw InvalidArgument("epsilon must lie in (0, 0.01)");
  }
  if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be >= 0");
  if (!(alpha_pos >= 0.0) || !(alpha_neg >= 0.0)) {
    throw InvalidArgument("alpha weights must be >= 0");
  }
}

FocalParams InverseFrequencyAlpha(std::size_t positives, std::size_t negatives) {
  if (positives == 0 || negatives == 0) {
    throw InvalidArgument("inverse-frequency alpha needs both classes present");
  }
  const double total = static_cast<double>(positives + negatives);
  FocalParams params;
  params.alpha_pos = 2.0 * static_cast<double>(negatives) / total;
  params.alpha_neg = 2.0 * static_cast<double>(positives) / total;
  return params;
}

double ClampProbability(double p, double epsilon) {
  return std::clamp(p, epsilon, 1.0 - epsilon);
}

double TrueClassProbability(double p, int y, double epsilon) {
  const double clamped = ClampProbability(p, epsilon);
  return y == 1 ? clamped : 1.0 - clamped;
}

double ConvexLoss(double p, int y, const FocalParams& params) {
  if (params.gamma > 1.0) throw InvalidArgument("convex stage requires gamma <= 1");
  const double pt = TrueClassProbability(p, y, params.epsilon);
  return -params.alpha(y) * (1.0 - params.gamma * pt) * std::log(pt);
}

double PowerLoss(double p, int y, const FocalParams& params, double exponent) {
  if (!(exponent >= 0.0)) throw InvalidArgument("power stage exponent must be >= 0");
  const double pt = TrueClassProbability(p, y, params.epsilon);
  return -params.alpha(y) * std::pow(1.0 - pt, exponent) * std::log(pt);
}

double WeightedCrossEntropy(double p, int y, const FocalParams& params) {
  return -params.alpha(y) * std::log(TrueClassProbability(p, y, params.epsilon));
}

double ConvexSecondDerivative(double p, double gamma) {
  return gamma / p + 1.0 / (p * p);
}

std::string_view StageKindName(StageKind kind) {
  return kind == StageKind::kConvex ? "convex" : "power";
}

std::string Stage::Label() const {
  return std::string(StageKindName(kind)) + "(" + FormatValue(value) + ")";
}

double StageLoss(double p, int y, const FocalParams& params, const Stage& stage) {
  if (stage.kind == StageKind::kConvex) {
    FocalParams convex = params;
    convex.gamma = stage.value;
    return ConvexLoss(p, y, convex);
  }
  return PowerLoss(p, y, params, stage.value);
}

double LossGrad(double p, int y, const FocalParams& params, const Stage& stage) {
  if (stage.kind == StageKind::kConvex && stage.value > 1.0) {
    throw InvalidArgument("convex stage requires gamma <= 1");
  }
  const double pt = TrueClassProbability(p, y, params.epsilon);
  const double dpt = GradWrtTrueClass(pt, params.alpha(y), stage);
  return y == 1 ? dpt : -dpt;
}

void SchedulePlan::Validate() const {
  if (stages.empty()) throw InvalidArgument("schedule '" + name + "' has no stages");
  int expected_first = 1;
  for (const Stage& stage : stages) {
    if (stage.first_epoch != expected_first) {
      throw InvalidArgument("schedule '" + name + "': stage " + stage.Label() +
                            " starts at epoch " + std::to_string(stage.first_epoch) +
                            ", expected " + std::to_string(expected_first));
    }
    if (stage.last_epoch < stage.first_epoch) {
      throw InvalidArgument("schedule '" + name + "': stage " + stage.Label() +
                            " has an empty epoch range");
    }
    if (!(stage.value >= 0.0)) {
      throw InvalidArgument("schedule '" + name + "': stage parameter must be >= 0");
    }
    if (stage.kind == StageKind::kConvex && stage.value > 1.0) {
      throw InvalidArgument("schedule '" + name + "': convex stage requires gamma <= 1");
    }
    expected_first = stage.last_epoch + 1;
  }
}

const Stage& SchedulePlan::StageForEpoch(int epoch) const {
  if (epoch < 1 || epoch > total_epochs()) {
    throw InvalidArgument("epoch " + std::to_string(epoch) + " outside [1, " +
                          std::to_string(total_epochs()) + "]");
  }
  const auto it = std::lower_bound(
      stages.begin(), stages.end(), epoch,
      [](const Stage& stage, int e) { return stage.last_epoch < e; });
  return *it;
}

std::string SchedulePlan::Describe() const {
  std::string out;
  for (const Stage& stage : stages) {
    if (!out.empty()) out += ',';
    out += std::string(StageKindName(stage.kind)) + ":" + FormatValue(stage.value) + ":" +
           std::to_string(stage.first_epoch) + "-" + std::to_string(stage.last_epoch);
  }
  return out;
}

SchedulePlan MultistagePlan(double final_gamma, int convex_cutoff, int intermediate_cutoff,
                            int total_epochs, double convex_gamma) {
  if (!(0 < convex_cutoff && convex_cutoff < intermediate_cutoff &&
        intermediate_cutoff < total_epochs)) {
    throw InvalidArgument("multistage plan needs 0 < convex cutoff < intermediate cutoff < "
                          "total epochs");
  }
  SchedulePlan plan;
  plan.name = "Multistage";
  plan.stages = {
      {StageKind::kConvex, convex_gamma, 1, convex_cutoff},
      {StageKind::kPower, final_gamma / 2.0, convex_cutoff + 1, intermediate_cutoff},
      {StageKind::kPower, final_gamma, intermediate_cutoff + 1, total_epochs},
  };
  plan.Validate();
  return plan;
}

SchedulePlan ConvexPlan(double gamma, int total_epochs) {
  SchedulePlan plan;
  plan.name = "Convex(\xCE\xB3=" + FormatValue(gamma) + ")";
  plan.stages = {{StageKind::kConvex, gamma, 1, total_epochs}};
  plan.Validate();
  return plan;
}

SchedulePlan NonconvexPlan(double gamma, int total_epochs) {
  SchedulePlan plan;
  plan.name = "Nonconvex(\xCE\xB3=" + FormatValue(gamma) + ")";
  plan.stages = {{StageKind::kPower, gamma, 1, total_epochs}};
  plan.Validate();
  return plan;
}

Stage ParseStage(std::string_view text) {
  auto fail = [&]() -> InvalidArgument {
    return InvalidArgument("bad stage '" + std::string(text) +
                           "' (expected <convex|power>:<value>:<first>-<last>)");
  };
  const auto c1 = text.find(':');
  if (c1 == std::string_view::npos) throw fail();
  const auto c2 = text.find(':', c1 + 1);
  if (c2 == std::string_view::npos) throw fail();
  const auto dash = text.find('-', c2 + 1);
  if (dash == std::string_view::npos) throw fail();

  Stage stage;
  const std::string_view kind = text.substr(0, c1);
  if (kind == "convex") {
    stage.kind = StageKind::kConvex;
  } else if (kind == "power") {
    stage.kind = StageKind::kPower;
  } else {
    throw fail();
  }
  auto parse_number = [&](std::string_view s, auto& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw fail();
  };
  parse_number(text.substr(c1 + 1, c2 - c1 - 1), stage.value);
  parse_number(text.substr(c2 + 1, dash - c2 - 1), stage.first_epoch);
  parse_number(text.substr(dash + 1), stage.last_epoch);
  return stage;
}

}  // namespace focalstage
