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

#ifndef FOCALSTAGE_EXPLAIN_H_
#define FOCALSTAGE_EXPLAIN_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "focalstage/common.h"
#include "focalstage/model.h"

namespace focalstage {

// Any scalar model output over one encoded row.
using Predictor = std::function<double(std::span<const double>)>;

Predictor MakePredictor(const RecurrentModel& model);

// Interventional value of a coalition: the mean model output over the
// background rows, with features in `coalition` taken from `instance` and
// the rest from the background row. Throws InvalidArgument on an empty
// background or mismatched widths.
double ValueFunction(const Predictor& model, std::span<const double> instance,
                     const std::vector<bool>& coalition, const RowMatrix& background);

enum class ShapMethod { kExact, kPermutation };

struct ShapReport {
  // phi_0, the mean output over the background.
  double base_value = 0.0;
  // One attribution vector per explained instance.
  std::vector<std::vector<double>> attributions;
  // f(x) for every explained instance.
  std::vector<double> predictions;
  std::vector<std::string> feature_names;
  std::size_t background_size = 0;
  ShapMethod method = ShapMethod::kExact;
  std::size_t permutations = 0;

  // Largest |phi_0 + sum(phi) - f(x)| over the instances.
  double MaxEfficiencyGap() const;
};

inline constexpr std::size_t kDefaultExactLimit = 12;

// Exact Shapley values by enumerating all 2^d coalitions with kernel
// weights |S|!(d-|S|-1)!/d!. Throws InvalidArgument if d > exact_limit.
ShapReport ExactShapley(const Predictor& model, std::span<const double> instance,
                        const RowMatrix& background,
                        std::size_t exact_limit = kDefaultExactLimit);

// Monte-Carlo estimate averaging marginal contributions over uniformly
// random feature orderings. Coalition values are memoized per call.
ShapReport PermutationShapley(const Predictor& model, std::span<const double> instance,
                              const RowMatrix& background, std::size_t permutations,
                              std::uint64_t seed);

struct ExplainOptions {
  std::size_t exact_limit = kDefaultExactLimit;
  // Used when the feature count exceeds exact_limit.
  std::size_t permutations = 256;
  std::uint64_t seed = 0;
  int jobs = 1;
};

// Attributions for every row of `instances`, exact when d <= exact_limit,
// permutation sampling otherwise. Instance i uses seed + i.
ShapReport ExplainInstances(const Predictor& model, const RowMatrix& instances,
                            const RowMatrix& background, const ExplainOptions& options,
                            std::vector<std::string> feature_names = {});

// Seeded uniform sample of `size` distinct rows (all rows if fewer).
RowMatrix SampleBackground(const RowMatrix& values, std::size_t size, std::uint64_t seed);

struct NamedPredictor {
  std::string name;
  Predictor model;
};

struct ShapSummary {
  std::vector<std::string> feature_names;
  std::vector<std::string> model_names;
  // mean_abs[m][j]: mean |phi_j| of model m over the instances.
  std::vector<std::vector<double>> mean_abs;
  // std / mean of each model's per-feature means (population std). Lower
  // means attributions are spread more evenly across features.
  std::vector<double> evenness;
  // Full reports, kept for per-instance output.
  std::vector<ShapReport> reports;
};

std::vector<double> MeanAbsolute(const ShapReport& report);
double EvennessStatistic(const std::vector<double>& per_feature);

// Mean absolute attribution per feature for each model. Throws
// InvalidArgument when `instances` is empty.
ShapSummary SummarizeShap(const std::vector<NamedPredictor>& models,
                          const RowMatrix& instances, const RowMatrix& background,
                          const ExplainOptions& options,
                          std::vector<std::string> feature_names = {});

// One summary per checkpoint (for example the end of the convex stage and
// the end of training), each covering a single model.
std::vector<ShapSummary> CheckpointAttribution(const std::vector<NamedPredictor>& checkpoints,
                                               const RowMatrix& instances,
                                               const RowMatrix& background,
                                               const ExplainOptions& options,
                                               std::vector<std::string> feature_names = {});

// feature_index,feature_name,mean_abs_shap:<model>...
void WriteShapSummaryCsv(const ShapSummary& summary, std::ostream& out);
// model,evenness
void WriteEvennessCsv(const ShapSummary& summary, std::ostream& out);
// model,instance,prediction,base_value,<feature names...>
void WriteShapInstancesCsv(const ShapSummary& summary, std::ostream& out);

}  // namespace focalstage

#endif  // FOCALSTAGE_EXPLAIN_H_
