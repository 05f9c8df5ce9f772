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

#include "metrics.h"

#include <cmath>
#include <cstdio>

#include "strsbp/error.h"

namespace strsbp::cli {
namespace {

std::string Num(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

MetricsLog::MetricsLog(const std::filesystem::path& dir)
    : metrics_(dir / "metrics.csv", std::ios::trunc),
      timing_(dir / "timing.csv", std::ios::trunc) {
  if (!metrics_ || !timing_) {
    throw DataError("cannot write metrics under " + dir.string());
  }
  metrics_ << "epoch,train_loss,train_acc,test_acc,skipped\n" << std::flush;
  timing_ << "epoch,wall_seconds\n" << std::flush;
}

std::string MetricsLog::FormatRow(const EpochMetrics& m) {
  return std::to_string(m.epoch) + ',' + Num(m.train_loss) + ',' +
         Num(m.train_accuracy) + ',' + Num(m.test_accuracy) + ',' +
         std::to_string(m.skipped);
}

void MetricsLog::Append(const EpochMetrics& m) {
  metrics_ << FormatRow(m) << '\n' << std::flush;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", m.wall_seconds);
  timing_ << m.epoch << ',' << buf << '\n' << std::flush;
}

}  // namespace strsbp::cli
