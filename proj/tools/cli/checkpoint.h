// Copyright 2026 The strsbp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef STRSBP_TOOLS_CLI_CHECKPOINT_H_
#define STRSBP_TOOLS_CLI_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "strsbp/network.h"

namespace strsbp::cli {

inline constexpr int kCheckpointVersion = 1;

// Text layout:
//   strsbp-checkpoint <version>
//   seed <n> / epoch <n> / one line per neuron parameter
//   layers <count>, then "<kind> <size> <density>" per layer
//   "feedforward|recurrent|mask <layer> <rows> <cols>" blocks, one matrix row
//   per line, values printed with 17 significant digits
//   end
struct Checkpoint {
  std::uint64_t seed = 0;
  int epoch = 0;
  NeuronParams params;
  Topology topology;
};

std::string SerializeCheckpoint(const Checkpoint& checkpoint);

// Throws a data Error on a version mismatch, malformed content, or a
// topology that fails validation.
Checkpoint ParseCheckpoint(std::string_view text);

// Writes through a temporary file and renames it into place.
void SaveCheckpoint(const std::filesystem::path& path,
                    const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace strsbp::cli

#endif  // STRSBP_TOOLS_CLI_CHECKPOINT_H_
