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

#ifndef STRSBP_TOOLS_CLI_CONFIG_H_
#define STRSBP_TOOLS_CLI_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "strsbp/data.h"
#include "strsbp/network.h"
#include "strsbp/optimize.h"

namespace strsbp::cli {

enum class DataSource { kSynthetic, kIdx, kEventCsv };

struct DataConfig {
  DataSource source = DataSource::kSynthetic;
  double duration = 400.0;
  // 0 means "infer": the output layer size for synthetic tasks, max label + 1
  // otherwise.
  std::size_t num_classes = 0;

  // synthetic
  std::size_t samples_per_class = 50;
  double high_rate_hz = 80.0;
  double low_rate_hz = 10.0;

  // idx
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
  double poisson_scale = 0.25;
  // Keep only the first N images of each split; 0 keeps all.
  std::size_t max_train = 0;
  std::size_t max_test = 0;

  // event_csv
  std::filesystem::path train_events;
  std::filesystem::path train_event_labels;
  std::filesystem::path test_events;
  std::filesystem::path test_event_labels;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  NeuronParams neuron;
  std::vector<LayerSpec> layers;
  TrainConfig train;
  DataConfig data;
};

// Parses a JSON document. Relative paths are resolved against `base_dir`.
// Unknown keys and type mismatches are validation errors naming the key.
RunConfig ParseConfig(const std::string& text,
                      const std::filesystem::path& base_dir);
RunConfig LoadConfig(const std::filesystem::path& path);

// Structural checks plus existence of every referenced data file.
std::vector<Violation> ValidateRunConfig(const RunConfig& config);

struct LoadedData {
  Dataset train;
  Dataset test;
  std::vector<std::string> warnings;
};

LoadedData LoadData(const RunConfig& config);

DataSource ParseDataSource(const std::string& name);
const char* DataSourceName(DataSource source);
LayerKind ParseLayerKind(const std::string& name);

}  // namespace strsbp::cli

#endif  // STRSBP_TOOLS_CLI_CONFIG_H_
