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

#include "focalstage/checkpoint.h"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace focalstage {
namespace {

DataError Malformed(const std::string& what) {
  return DataError("malformed checkpoint: " + what);
}

std::string NextLine(std::istream& in, const char* expecting) {
  std::string line;
  if (!std::getline(in, line)) throw Malformed(std::string("unexpected end, expected ") + expecting);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

void WriteCheckpoint(const Checkpoint& checkpoint, std::ostream& out) {
  const RecurrentModel& model = checkpoint.model;
  out << "focalstage-checkpoint " << kCheckpointVersion << '\n';
  out << "dims " << model.input_dim() << ' ' << model.hidden_dim() << ' '
      << model.sequence_len() << '\n';
  for (const auto& [key, value] : checkpoint.metadata) out << "meta " << key << ' ' << value << '\n';
  for (const auto& name : checkpoint.feature_names) out << "feature " << name << '\n';
  const auto params = model.parameters();
  char buf[40];
  for (const auto& block : model.Blocks()) {
    out << "tensor " << block.name << ' ' << block.rows << ' ' << block.cols << '\n';
    for (std::size_t i = 0; i < block.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", params[block.offset + i]);
      if (i > 0) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  out << "end\n";
}

Checkpoint ReadCheckpoint(std::istream& in) {
  std::istringstream header(NextLine(in, "header"));
  std::string magic;
  int version = 0;
  header >> magic >> version;
  if (magic != "focalstage-checkpoint") throw Malformed("missing focalstage-checkpoint header");
  if (version != kCheckpointVersion) {
    throw Malformed("unsupported version " + std::to_string(version));
  }

  std::istringstream dims(NextLine(in, "dims"));
  std::string tag;
  std::size_t d = 0, h = 0, t = 0;
  if (!(dims >> tag >> d >> h >> t) || tag != "dims") throw Malformed("bad dims line");

  Checkpoint checkpoint;
  checkpoint.model = RecurrentModel(d, h, t);
  auto params = checkpoint.model.parameters();
  const auto blocks = checkpoint.model.Blocks();
  std::size_t next_block = 0;

  while (true) {
    const std::string line = NextLine(in, "tensor or end");
    if (line == "end") break;
    const auto space = line.find(' ');
    const std::string kind = line.substr(0, space);
    const std::string rest = space == std::string::npos ? "" : line.substr(space + 1);
    if (kind == "meta") {
      const auto sep = rest.find(' ');
      checkpoint.metadata[rest.substr(0, sep)] =
          sep == std::string::npos ? "" : rest.substr(sep + 1);
    } else if (kind == "feature") {
      checkpoint.feature_names.push_back(rest);
    } else if (kind == "tensor") {
      if (next_block >= blocks.size()) throw Malformed("too many tensors");
      const ParameterBlock& block = blocks[next_block++];
      std::istringstream spec(rest);
      std::string name;
      std::size_t rows = 0, cols = 0;
      spec >> name >> rows >> cols;
      if (name != block.name || rows != block.rows || cols != block.cols) {
        throw Malformed("expected tensor " + block.name + " " + std::to_string(block.rows) +
                        "x" + std::to_string(block.cols) + ", found '" + rest + "'");
      }
      std::istringstream values(NextLine(in, "tensor values"));
      for (std::size_t i = 0; i < block.size(); ++i) {
        std::string token;
        if (!(values >> token)) throw Malformed("tensor " + name + " is short");
        try {
          std::size_t used = 0;
          params[block.offset + i] = std::stod(token, &used);
          if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
          throw Malformed("bad value '" + token + "' in tensor " + name);
        }
      }
      std::string extra;
      if (values >> extra) throw Malformed("tensor " + name + " has extra values");
    } else {
      throw Malformed("unknown line '" + line + "'");
    }
  }
  if (next_block != blocks.size()) throw Malformed("missing tensors");
  if (!checkpoint.model.AllFinite()) throw Malformed("non-finite parameter");
  return checkpoint;
}

void SaveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  WriteCheckpoint(checkpoint, out);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  return ReadCheckpoint(in);
}

}  // namespace focalstage
