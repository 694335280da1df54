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

#include "focalstage/explain.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "focalstage/parallel.h"
#include "focalstage/rng.h"

namespace focalstage {
namespace {

constexpr std::size_t kMaxCoalitionBits = 64;

void CheckBackground(std::span<const double> instance, const RowMatrix& background) {
  if (background.rows() == 0) throw InvalidArgument("background set is empty");
  if (static_cast<std::size_t>(background.cols()) != instance.size()) {
    throw InvalidArgument("background has " + std::to_string(background.cols()) +
                          " features, instance has " + std::to_string(instance.size()));
  }
}

// Mean output over the background with coalition members taken from the
// instance. `scratch` must hold d values.
double CoalitionValue(const Predictor& model, std::span<const double> instance,
                      std::uint64_t mask, const RowMatrix& background,
                      std::vector<double>& scratch) {
  const std::size_t d = instance.size();
  double first = 0.0;
  double total = 0.0;
  for (Eigen::Index b = 0; b < background.rows(); ++b) {
    for (std::size_t j = 0; j < d; ++j) {
      scratch[j] = (mask >> j) & 1u ? instance[j]
                                    : background(b, static_cast<Eigen::Index>(j));
    }
    const double v = model(scratch);
    if (b == 0) {
      first = v;
    } else {
      total += v - first;
    }
  }
  // Centred on the first row so identical outputs average exactly.
  return first + total / static_cast<double>(background.rows());
}

// Shapley kernel weight |S|!(d-|S|-1)!/d! = 1 / (d * C(d-1, |S|)).
std::vector<double> KernelWeights(std::size_t d) {
  std::vector<double> weights(d);
  double binom = 1.0;  // C(d-1, s)
  for (std::size_t s = 0; s < d; ++s) {
    weights[s] = 1.0 / (static_cast<double>(d) * binom);
    binom = binom * static_cast<double>(d - 1 - s) / static_cast<double>(s + 1);
  }
  return weights;
}

ShapReport MakeReport(std::size_t d, std::size_t background_size, ShapMethod method) {
  ShapReport report;
  report.method = method;
  report.background_size = background_size;
  for (std::size_t j = 0; j < d; ++j) report.feature_names.push_back("x" + std::to_string(j));
  return report;
}

}  // namespace

Predictor MakePredictor(const RecurrentModel& model) {
  return [&model](std::span<const double> row) { return model.Predict(row); };
}

double ValueFunction(const Predictor& model, std::span<const double> instance,
                     const std::vector<bool>& coalition, const RowMatrix& background) {
  CheckBackground(instance, background);
  if (coalition.size() != instance.size()) {
    throw InvalidArgument("coalition mask width does not match the instance");
  }
  std::vector<double> scratch(instance.size());
  double first = 0.0;
  double total = 0.0;
  for (Eigen::Index b = 0; b < background.rows(); ++b) {
    for (std::size_t j = 0; j < instance.size(); ++j) {
      scratch[j] = coalition[j] ? instance[j] : background(b, static_cast<Eigen::Index>(j));
    }
    const double v = model(scratch);
    if (b == 0) {
      first = v;
    } else {
      total += v - first;
    }
  }
  // Centred on the first row so identical outputs average exactly.
  return first + total / static_cast<double>(background.rows());
}

double ShapReport::MaxEfficiencyGap() const {
  double gap = 0.0;
  for (std::size_t i = 0; i < attributions.size(); ++i) {
    const double sum =
        std::accumulate(attributions[i].begin(), attributions[i].end(), base_value);
    gap = std::max(gap, std::abs(sum - predictions[i]));
  }
  return gap;
}

ShapReport ExactShapley(const Predictor& model, std::span<const double> instance,
                        const RowMatrix& background, std::size_t exact_limit) {
  CheckBackground(instance, background);
  const std::size_t d = instance.size();
  if (d > exact_limit || d >= kMaxCoalitionBits) {
    throw InvalidArgument("exact Shapley enumeration is limited to " +
                          std::to_string(exact_limit) + " features (got " + std::to_string(d) +
                          "); use permutation sampling instead");
  }
  const std::uint64_t full = (std::uint64_t{1} << d) - 1;
  std::vector<double> scratch(d);
  std::vector<double> value(full + 1);
  for (std::uint64_t mask = 0; mask <= full; ++mask) {
    value[mask] = CoalitionValue(model, instance, mask, background, scratch);
  }

  const std::vector<double> weights = KernelWeights(d);
  std::vector<double> phi(d, 0.0);
  // Coalitions without feature i are enumerated as (d-1)-bit masks with a
  // zero spliced in at bit i, so adjacent interchangeable features sum the
  // same terms in the same order.
  const std::uint64_t rest = full >> 1;
  for (std::size_t i = 0; i < d; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    const std::uint64_t low = bit - 1;
    for (std::uint64_t r = 0; r <= rest; ++r) {
      const std::uint64_t mask = (r & low) | ((r & ~low) << 1);
      const auto size = static_cast<std::size_t>(std::popcount(mask));
      phi[i] += weights[size] * (value[mask | bit] - value[mask]);
    }
  }

  ShapReport report = MakeReport(d, static_cast<std::size_t>(background.rows()),
                                 ShapMethod::kExact);
  report.base_value = value[0];
  report.attributions.push_back(std::move(phi));
  report.predictions.push_back(model(instance));
  return report;
}

ShapReport PermutationShapley(const Predictor& model, std::span<const double> instance,
                              const RowMatrix& background, std::size_t permutations,
                              std::uint64_t seed) {
  CheckBackground(instance, background);
  if (permutations == 0) throw InvalidArgument("permutation count must be >= 1");
  const std::size_t d = instance.size();
  if (d >= kMaxCoalitionBits) {
    throw InvalidArgument("permutation Shapley supports fewer than 64 features");
  }

  std::vector<double> scratch(d);
  std::unordered_map<std::uint64_t, double> memo;
  auto value = [&](std::uint64_t mask) {
    const auto it = memo.find(mask);
    if (it != memo.end()) return it->second;
    const double v = CoalitionValue(model, instance, mask, background, scratch);
    memo.emplace(mask, v);
    return v;
  };

  Rng rng(seed);
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(d, 0.0);
  const double empty_value = value(0);
  for (std::size_t p = 0; p < permutations; ++p) {
    rng.Shuffle(order);
    std::uint64_t mask = 0;
    double previous = empty_value;
    for (std::size_t feature : order) {
      mask |= std::uint64_t{1} << feature;
      const double current = value(mask);
      phi[feature] += current - previous;
      previous = current;
    }
  }
  for (double& v : phi) v /= static_cast<double>(permutations);

  ShapReport report = MakeReport(d, static_cast<std::size_t>(background.rows()),
                                 ShapMethod::kPermutation);
  report.permutations = permutations;
  report.base_value = empty_value;
  report.attributions.push_back(std::move(phi));
  report.predictions.push_back(model(instance));
  return report;
}

ShapReport ExplainInstances(const Predictor& model, const RowMatrix& instances,
                            const RowMatrix& background, const ExplainOptions& options,
                            std::vector<std::string> feature_names) {
  const auto d = static_cast<std::size_t>(instances.cols());
  const bool exact = d <= options.exact_limit;
  std::vector<ShapReport> per_instance(static_cast<std::size_t>(instances.rows()));
  ParallelFor(per_instance.size(), options.jobs, [&](std::size_t i) {
    const std::span<const double> row(instances.row(static_cast<Eigen::Index>(i)).data(), d);
    per_instance[i] = exact ? ExactShapley(model, row, background, options.exact_limit)
                            : PermutationShapley(model, row, background,
                                                 options.permutations, options.seed + i);
  });

  ShapReport report = MakeReport(d, static_cast<std::size_t>(background.rows()),
                                 exact ? ShapMethod::kExact : ShapMethod::kPermutation);
  if (!exact) report.permutations = options.permutations;
  if (!feature_names.empty()) {
    if (feature_names.size() != d) throw InvalidArgument("feature name count mismatch");
    report.feature_names = std::move(feature_names);
  }
  if (per_instance.empty()) {
    std::vector<double> scratch(d);
    if (background.rows() > 0 && static_cast<std::size_t>(background.cols()) == d) {
      report.base_value = CoalitionValue(model, scratch, 0, background, scratch);
    }
    return report;
  }
  report.base_value = per_instance.front().base_value;
  for (auto& r : per_instance) {
    report.attributions.push_back(std::move(r.attributions.front()));
    report.predictions.push_back(r.predictions.front());
  }
  return report;
}

RowMatrix SampleBackground(const RowMatrix& values, std::size_t size, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(values.rows());
  std::vector<std::size_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  Rng rng(seed);
  const std::size_t take = std::min(size, n);
  for (std::size_t i = 0; i < take; ++i) {
    std::swap(indices[i], indices[i + rng.UniformIndex(n - i)]);
  }
  indices.resize(take);
  std::sort(indices.begin(), indices.end());
  RowMatrix out(static_cast<Eigen::Index>(take), values.cols());
  for (std::size_t i = 0; i < take; ++i) {
    out.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(indices[i]));
  }
  return out;
}

std::vector<double> MeanAbsolute(const ShapReport& report) {
  const std::size_t d = report.feature_names.size();
  std::vector<double> mean(d, 0.0);
  if (report.attributions.empty()) return mean;
  for (const auto& phi : report.attributions) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += std::abs(phi[j]);
  }
  for (double& v : mean) v /= static_cast<double>(report.attributions.size());
  return mean;
}

double EvennessStatistic(const std::vector<double>& per_feature) {
  if (per_feature.empty()) return 0.0;
  const double n = static_cast<double>(per_feature.size());
  const double mean = std::accumulate(per_feature.begin(), per_feature.end(), 0.0) / n;
  if (mean == 0.0) return 0.0;
  double var = 0.0;
  for (double v : per_feature) var += (v - mean) * (v - mean);
  return std::sqrt(var / n) / mean;
}

ShapSummary SummarizeShap(const std::vector<NamedPredictor>& models,
                          const RowMatrix& instances, const RowMatrix& background,
                          const ExplainOptions& options,
                          std::vector<std::string> feature_names) {
  if (instances.rows() == 0) throw InvalidArgument("SHAP summary needs at least one instance");
  ShapSummary summary;
  for (const auto& named : models) {
    ShapReport report =
        ExplainInstances(named.model, instances, background, options, feature_names);
    summary.model_names.push_back(named.name);
    summary.mean_abs.push_back(MeanAbsolute(report));
    summary.evenness.push_back(EvennessStatistic(summary.mean_abs.back()));
    if (summary.feature_names.empty()) summary.feature_names = report.feature_names;
    summary.reports.push_back(std::move(report));
  }
  if (summary.feature_names.empty()) {
    summary.feature_names = feature_names;
    for (std::size_t j = summary.feature_names.size();
         j < static_cast<std::size_t>(instances.cols()); ++j) {
      summary.feature_names.push_back("x" + std::to_string(j));
    }
  }
  return summary;
}

std::vector<ShapSummary> CheckpointAttribution(const std::vector<NamedPredictor>& checkpoints,
                                               const RowMatrix& instances,
                                               const RowMatrix& background,
                                               const ExplainOptions& options,
                                               std::vector<std::string> feature_names) {
  std::vector<ShapSummary> out;
  out.reserve(checkpoints.size());
  for (const auto& checkpoint : checkpoints) {
    out.push_back(SummarizeShap({checkpoint}, instances, background, options, feature_names));
  }
  return out;
}

namespace {
std::string CsvCell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::string Real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}
}  // namespace

void WriteShapSummaryCsv(const ShapSummary& summary, std::ostream& out) {
  out << "feature_index,feature_name";
  for (const auto& name : summary.model_names) out << ',' << CsvCell("mean_abs_shap:" + name);
  out << '\n';
  for (std::size_t j = 0; j < summary.feature_names.size(); ++j) {
    out << j << ',' << CsvCell(summary.feature_names[j]);
    for (const auto& column : summary.mean_abs) out << ',' << Real(column[j]);
    out << '\n';
  }
}

void WriteEvennessCsv(const ShapSummary& summary, std::ostream& out) {
  out << "model,evenness\n";
  for (std::size_t m = 0; m < summary.model_names.size(); ++m) {
    out << CsvCell(summary.model_names[m]) << ',' << Real(summary.evenness[m]) << '\n';
  }
}

void WriteShapInstancesCsv(const ShapSummary& summary, std::ostream& out) {
  out << "model,instance,prediction,base_value";
  for (const auto& name : summary.feature_names) out << ',' << CsvCell(name);
  out << '\n';
  for (std::size_t m = 0; m < summary.reports.size(); ++m) {
    const ShapReport& report = summary.reports[m];
    for (std::size_t i = 0; i < report.attributions.size(); ++i) {
      out << CsvCell(summary.model_names[m]) << ',' << i << ',' << Real(report.predictions[i])
          << ',' << Real(report.base_value);
      for (double phi : report.attributions[i]) out << ',' << Real(phi);
      out << '\n';
    }
  }
}

}  // namespace focalstage
