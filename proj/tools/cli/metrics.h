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

#ifndef STRSBP_TOOLS_CLI_METRICS_H_
#define STRSBP_TOOLS_CLI_METRICS_H_

#include <filesystem>
#include <fstream>
#include <string>

#include "strsbp/optimize.h"

namespace strsbp::cli {

// Per-epoch CSV logs. metrics.csv holds only values that are a function of
// the configuration and seed, so reruns compare byte for byte; wall-clock
// time goes to timing.csv.
class MetricsLog {
 public:
  explicit MetricsLog(const std::filesystem::path& dir);

  void Append(const EpochMetrics& m);

  static std::string FormatRow(const EpochMetrics& m);

 private:
  std::ofstream metrics_;
  std::ofstream timing_;
};

}  // namespace strsbp::cli

#endif  // STRSBP_TOOLS_CLI_METRICS_H_
