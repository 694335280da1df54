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

#ifndef FOCALSTAGE_RNG_H_
#define FOCALSTAGE_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace focalstage {

// Seeded generator with portable derived distributions. The standard
// <random> distributions are implementation-defined, so uniform reals,
// bounded integers and normals are derived here from the raw 64-bit engine
// to keep output files identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of precision.
  double Uniform();
  // Uniform on [lo, hi).
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer on [0, bound). bound must be positive.
  std::uint64_t UniformIndex(std::uint64_t bound);
  // Standard normal via Box-Muller.
  double Normal();

  template <typename T>
  void Shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = UniformIndex(i);
      std::swap(values[i - 1], values[j]);
    }
  }
  template <typename T>
  void Shuffle(std::vector<T>& values) {
    Shuffle(std::span<T>(values));
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// Seed for an independent stream of a (fold, schedule) run.
std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t fold_index,
                         std::uint64_t schedule_index);

}  // namespace focalstage

#endif  // FOCALSTAGE_RNG_H_
