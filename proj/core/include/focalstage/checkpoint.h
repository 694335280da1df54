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

#ifndef FOCALSTAGE_CHECKPOINT_H_
#define FOCALSTAGE_CHECKPOINT_H_

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "focalstage/model.h"

namespace focalstage {

// Text container, one item per line:
//
//   focalstage-checkpoint 1
//   dims <input_dim> <hidden_dim> <sequence_len>
//   meta <key> <value...>          (zero or more)
//   feature <name>                 (zero or more, in column order)
//   tensor <name> <rows> <cols>
//   <rows*cols values, row-major, %.17g, space separated>
//   end
//
// Tensors appear in RecurrentModel::Blocks() order. Values are written with
// 17 significant digits so a load reproduces the parameters bit for bit.
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  RecurrentModel model{1, 1, 1};
  std::vector<std::string> feature_names;
  std::map<std::string, std::string> metadata;
};

void WriteCheckpoint(const Checkpoint& checkpoint, std::ostream& out);
Checkpoint ReadCheckpoint(std::istream& in);

void SaveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace focalstage

#endif  // FOCALSTAGE_CHECKPOINT_H_
