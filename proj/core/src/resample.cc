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

#include "focalstage/resample.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "focalstage/rng.h"

namespace focalstage {
namespace {

// Relative slack when turning a real-valued ratio target into a count, so
// 100 * 0.5 is 50 rather than 51 after rounding noise.
constexpr double kCountSlack = 1e-9;

struct ClassSplit {
  int minority_label = 1;
  std::vector<std::size_t> minority;
  std::vector<std::size_t> majority;
};

ClassSplit SplitClasses(const EncodedMatrix& matrix) {
  ClassSplit split;
  std::vector<std::size_t> zeros, ones;
  for (std::size_t i = 0; i < matrix.labels.size(); ++i) {
    (matrix.labels[i] == 1 ? ones : zeros).push_back(i);
  }
  if (zeros.empty() || ones.empty()) {
    throw InvalidArgument("resampling needs both classes present");
  }
  if (ones.size() <= zeros.size()) {
    split.minority_label = 1;
    split.minority = std::move(ones);
    split.majority = std::move(zeros);
  } else {
    split.minority_label = 0;
    split.minority = std::move(zeros);
    split.majority = std::move(ones);
  }
  return split;
}

void CheckRatio(double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw InvalidArgument("resampling ratio must lie in (0, 1], got " + std::to_string(ratio));
  }
}

std::size_t MinorityTarget(std::size_t majority, double ratio) {
  return static_cast<std::size_t>(
      std::ceil(static_cast<double>(majority) * ratio * (1.0 - kCountSlack)));
}

EncodedMatrix AppendRows(const EncodedMatrix& matrix, const RowMatrix& extra, int label) {
  EncodedMatrix out;
  out.feature_names = matrix.feature_names;
  out.encoders = matrix.encoders;
  out.values.resize(matrix.values.rows() + extra.rows(), matrix.values.cols());
  out.values.topRows(matrix.values.rows()) = matrix.values;
  out.values.bottomRows(extra.rows()) = extra;
  out.labels = matrix.labels;
  out.labels.insert(out.labels.end(), static_cast<std::size_t>(extra.rows()), label);
  return out;
}

}  // namespace

EncodedMatrix RandomUndersample(const EncodedMatrix& matrix, double ratio,
                                std::uint64_t seed) {
  CheckRatio(ratio);
  ClassSplit split = SplitClasses(matrix);
  Rng rng(seed);

  const auto keep = static_cast<std::size_t>(std::floor(
      static_cast<double>(split.minority.size()) / ratio * (1.0 + kCountSlack)));
  std::vector<std::size_t> rows = split.minority;
  if (keep < split.majority.size()) {
    // Partial Fisher-Yates: the first `keep` slots become the sample.
    for (std::size_t i = 0; i < keep; ++i) {
      const std::size_t j = i + rng.UniformIndex(split.majority.size() - i);
      std::swap(split.majority[i], split.majority[j]);
    }
    split.majority.resize(keep);
  }
  rows.insert(rows.end(), split.majority.begin(), split.majority.end());
  std::sort(rows.begin(), rows.end());
  rng.Shuffle(rows);
  return matrix.SelectRows(rows);
}

EncodedMatrix RandomOversample(const EncodedMatrix& matrix, double ratio,
                               std::uint64_t seed) {
  CheckRatio(ratio);
  const ClassSplit split = SplitClasses(matrix);
  const std::size_t target = MinorityTarget(split.majority.size(), ratio);
  if (target <= split.minority.size()) return matrix;

  Rng rng(seed);
  const std::size_t extra = target - split.minority.size();
  RowMatrix rows(static_cast<Eigen::Index>(extra), matrix.values.cols());
  for (std::size_t i = 0; i < extra; ++i) {
    const std::size_t src = split.minority[rng.UniformIndex(split.minority.size())];
    rows.row(static_cast<Eigen::Index>(i)) = matrix.values.row(static_cast<Eigen::Index>(src));
  }
  return AppendRows(matrix, rows, split.minority_label);
}

std::vector<std::size_t> NearestNeighbors(const RowMatrix& values, std::size_t row,
                                          const std::vector<std::size_t>& candidates,
                                          std::size_t k) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(candidates.size());
  const auto base = values.row(static_cast<Eigen::Index>(row));
  for (std::size_t c : candidates) {
    if (c == row) continue;
    dist.emplace_back((values.row(static_cast<Eigen::Index>(c)) - base).squaredNorm(), c);
  }
  k = std::min(k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(dist[i].second);
  return out;
}

EncodedMatrix Smote(const EncodedMatrix& matrix, std::size_t k, double ratio,
                    std::uint64_t seed) {
  CheckRatio(ratio);
  if (k == 0) throw InvalidArgument("SMOTE needs k >= 1");
  const ClassSplit split = SplitClasses(matrix);
  if (split.minority.size() <= k) {
    throw InvalidArgument("SMOTE needs more minority rows (" +
                          std::to_string(split.minority.size()) + ") than k (" +
                          std::to_string(k) + "); use a smaller k");
  }
  const std::size_t target = MinorityTarget(split.majority.size(), ratio);
  if (target <= split.minority.size()) return matrix;

  std::vector<std::vector<std::size_t>> neighbors(split.minority.size());
  for (std::size_t m = 0; m < split.minority.size(); ++m) {
    neighbors[m] = NearestNeighbors(matrix.values, split.minority[m], split.minority, k);
  }

  Rng rng(seed);
  const std::size_t extra = target - split.minority.size();
  RowMatrix rows(static_cast<Eigen::Index>(extra), matrix.values.cols());
  for (std::size_t i = 0; i < extra; ++i) {
    const std::size_t m = rng.UniformIndex(split.minority.size());
    const std::size_t nn = neighbors[m][rng.UniformIndex(neighbors[m].size())];
    const double u = rng.Uniform();
    const auto base = matrix.values.row(static_cast<Eigen::Index>(split.minority[m]));
    const auto other = matrix.values.row(static_cast<Eigen::Index>(nn));
    rows.row(static_cast<Eigen::Index>(i)) = base + u * (other - base);
  }
  return AppendRows(matrix, rows, split.minority_label);
}

std::string_view ResampleStrategyName(ResampleStrategy strategy) {
  switch (strategy) {
    case ResampleStrategy::kNone:
      return "none";
    case ResampleStrategy::kUndersample:
      return "undersample";
    case ResampleStrategy::kOversample:
      return "oversample";
    case ResampleStrategy::kSmote:
      return "smote";
    case ResampleStrategy::kHybrid:
      return "hybrid";
  }
  return "none";
}

ResampleStrategy ParseResampleStrategy(std::string_view name) {
  for (auto s : {ResampleStrategy::kNone, ResampleStrategy::kUndersample,
                 ResampleStrategy::kOversample, ResampleStrategy::kSmote,
                 ResampleStrategy::kHybrid}) {
    if (ResampleStrategyName(s) == name) return s;
  }
  throw InvalidArgument("unknown resampling strategy '" + std::string(name) +
                        "' (expected none, undersample, oversample, smote or hybrid)");
}

EncodedMatrix Resample(const EncodedMatrix& matrix, const ResampleOptions& options,
                       std::uint64_t seed) {
  switch (options.strategy) {
    case ResampleStrategy::kNone:
      return matrix;
    case ResampleStrategy::kUndersample:
      return RandomUndersample(matrix, options.ratio, seed);
    case ResampleStrategy::kOversample:
      return RandomOversample(matrix, options.ratio, seed);
    case ResampleStrategy::kSmote:
      return Smote(matrix, options.k_neighbors, options.ratio, seed);
    case ResampleStrategy::kHybrid: {
      const EncodedMatrix reduced =
          RandomUndersample(matrix, 1.0 / options.hybrid_majority_multiple, seed);
      const std::size_t minority =
          std::min(reduced.CountLabel(0), reduced.CountLabel(1));
      if (minority < 2) return RandomOversample(reduced, options.ratio, seed + 1);
      const std::size_t k = std::min(options.k_neighbors, minority - 1);
      return Smote(reduced, k, options.ratio, seed + 1);
    }
  }
  return matrix;
}

}  // namespace focalstage
