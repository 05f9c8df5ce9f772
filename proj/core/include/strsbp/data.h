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

#ifndef STRSBP_DATA_H_
#define STRSBP_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "strsbp/network.h"

namespace strsbp {

struct LabeledSpikeSample {
  std::vector<SpikeTrain> input;  // one train per input neuron
  std::size_t label = 0;
  double duration = 0.0;
};

struct Dataset {
  std::vector<LabeledSpikeSample> samples;
  std::size_t num_classes = 0;
  std::size_t num_inputs = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Throws a data Error naming the first sample that breaks an invariant
// (times inside [0, duration) on the step grid, label < num_classes, one
// train per input).
void CheckDataset(const Dataset& dataset, const NeuronParams& params);

// Independent Bernoulli draw per neuron and per step with probability
// scale * intensity / 255. Deterministic in `seed`.
std::vector<SpikeTrain> PoissonEncode(std::span<const std::uint8_t> pixels,
                                      double duration, double scale,
                                      std::uint64_t seed, double step = 1.0);

struct LabeledImage {
  std::vector<std::uint8_t> pixels;  // row-major
  std::size_t label = 0;
};

// Parses a big-endian IDX image file (magic 0x00000803, dims n x rows x cols)
// and its label file (magic 0x00000801). Throws a data Error on bad magic,
// truncation, or count mismatch.
std::vector<LabeledImage> LoadIdx(const std::filesystem::path& images,
                                  const std::filesystem::path& labels);

// Writes the two IDX files for `images`, all of which must be rows x cols.
void SaveIdx(const std::filesystem::path& images,
             const std::filesystem::path& labels,
             std::span<const LabeledImage> data, std::size_t rows,
             std::size_t cols);

struct EncodeOptions {
  double duration = 400.0;
  double scale = 0.25;
  std::uint64_t seed = 0;
  double step = 1.0;
};

// Poisson-encodes every image; sample i uses seed (options.seed, i).
Dataset EncodeImages(std::span<const LabeledImage> images,
                     const EncodeOptions& options);

// Reads "sample_id,neuron_id,time_ms" events plus "sample_id,label" labels.
// Samples are returned in ascending id order; samples that appear only in the
// labels file get empty trains. Exact duplicate events are dropped and
// reported in `warnings` when provided. Throws a data Error with the line
// number for out-of-range neuron ids or times, malformed lines, events of
// unlabeled samples, or duplicate labels.
std::vector<LabeledSpikeSample> LoadEventCsv(
    const std::filesystem::path& events, const std::filesystem::path& labels,
    std::size_t num_neurons, double duration,
    std::vector<std::string>* warnings = nullptr);

void WriteEventCsv(const std::filesystem::path& events,
                   const std::filesystem::path& labels,
                   std::span<const LabeledSpikeSample> samples);

struct SyntheticTask {
  Dataset train;
  Dataset test;
  // templates[c][i] is true when input i fires at the high rate for class c.
  std::vector<std::vector<bool>> templates;
};

struct SyntheticTaskOptions {
  std::size_t samples_per_class = 50;
  double high_rate_hz = 80.0;
  double low_rate_hz = 10.0;
  double step = 1.0;
  // Minimum fraction of inputs on which any two class templates differ.
  double min_template_distance = 0.25;
};

// Per class, a random subset of inputs fires at the high rate and the rest at
// the low rate. Samples are independent Poisson draws from the class
// template, split 80/20 into train/test within each class.
SyntheticTask MakeSyntheticRateTask(std::size_t num_classes,
                                    std::size_t num_inputs, double duration,
                                    std::uint64_t seed,
                                    const SyntheticTaskOptions& options = {});

}  // namespace strsbp

#endif  // STRSBP_DATA_H_
