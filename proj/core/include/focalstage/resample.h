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

#ifndef FOCALSTAGE_RESAMPLE_H_
#define FOCALSTAGE_RESAMPLE_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "focalstage/dataio.h"

namespace focalstage {

// Majority rows are subsampled without replacement until
// minority/majority >= ratio. The whole output is then shuffled by `seed`.
// If the ratio already holds only the shuffle is applied.
EncodedMatrix RandomUndersample(const EncodedMatrix& matrix, double ratio,
                                std::uint64_t seed);

// Minority rows are duplicated (sampled with replacement) and appended
// after the original rows until minority/majority >= ratio.
EncodedMatrix RandomOversample(const EncodedMatrix& matrix, double ratio,
                               std::uint64_t seed);

// Indices of the k nearest rows to `row` among `candidates` by Euclidean
// distance, excluding `row` itself. Exhaustive search; ties go to the lower
// index.
std::vector<std::size_t> NearestNeighbors(const RowMatrix& values, std::size_t row,
                                          const std::vector<std::size_t>& candidates,
                                          std::size_t k);

// SMOTE. Synthetic minority rows x + u (x_nn - x) are appended after the
// original rows until minority/majority >= ratio. Requires minority > k.
EncodedMatrix Smote(const EncodedMatrix& matrix, std::size_t k, double ratio,
                    std::uint64_t seed);

enum class ResampleStrategy { kNone, kUndersample, kOversample, kSmote, kHybrid };

std::string_view ResampleStrategyName(ResampleStrategy strategy);
ResampleStrategy ParseResampleStrategy(std::string_view name);

struct ResampleOptions {
  ResampleStrategy strategy = ResampleStrategy::kHybrid;
  // Target minority/majority ratio for the single-step strategies, and the
  // final SMOTE ratio for the hybrid.
  double ratio = 1.0;
  // Hybrid only: the majority is first cut to at most this multiple of
  // the minority.
  double hybrid_majority_multiple = 4.0;
  std::size_t k_neighbors = 5;
};

// Applies the configured strategy. For the hybrid, SMOTE's k is reduced to
// (minority - 1) when the fold has too few minority rows.
EncodedMatrix Resample(const EncodedMatrix& matrix, const ResampleOptions& options,
                       std::uint64_t seed);

}  // namespace focalstage

#endif  // FOCALSTAGE_RESAMPLE_H_
