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

#ifndef STRSBP_OPTIMIZE_H_
#define STRSBP_OPTIMIZE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "strsbp/backprop.h"
#include "strsbp/data.h"
#include "strsbp/network.h"
#include "strsbp/simulate.h"
#include "strsbp/spsp.h"

namespace strsbp {

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam over every trainable weight of a Topology.
class AdamState {
 public:
  AdamState(const Topology& topology, AdamOptions options = {});

  // Applies one descent step to `topology`. Returns false and leaves both the
  // state and the weights untouched if `gradients` has a non-finite entry.
  // Masked recurrent entries are never modified.
  bool Step(const GradientSet& gradients, Topology& topology);

  std::int64_t steps() const { return steps_; }
  const GradientSet& first_moment() const { return m_; }
  const GradientSet& second_moment() const { return v_; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  GradientSet m_;
  GradientSet v_;
  std::int64_t steps_ = 0;
};

struct TrainConfig {
  double target_count = 35.0;
  double nontarget_count = 5.0;
  int epochs = 1;
  double reg_lambda = 1e-5;
  bool lateral_inhibition = false;
  double inhibition_weight = 0.0;
  Solver solver = Solver::kExact;
  PartialsKind partials = PartialsKind::kPreRate;
  // See TableauOptions::probe_silent.
  bool probe_silent = true;
  std::uint64_t seed = 0;
  // Test-set evaluation period in epochs; the last epoch is always evaluated.
  int eval_every = 1;
  AdamOptions adam;

  SimulationOptions simulation() const {
    SimulationOptions options;
    options.lateral_inhibition = lateral_inhibition;
    options.inhibition_weight = inhibition_weight;
    return options;
  }
};

std::vector<Violation> ValidateTrainConfig(const TrainConfig& config);

// E = 0.5 * |o - y|^2.
double Loss(std::span<const double> counts, std::span<const double> labels);

// target_count at class_index, nontarget_count elsewhere.
std::vector<double> MakeLabels(std::size_t class_index, std::size_t num_classes,
                               const TrainConfig& config);

// lambda * sign(w) * exp(|w|) on every trainable weight.
GradientSet RegularizationGradient(const Topology& topology, double lambda);

// into += other (shapes must match).
void Accumulate(GradientSet& into, const GradientSet& other);

// Argmax of the output firing counts; ties go to the lowest index.
std::size_t PredictClass(std::span<const int> output_counts);

// Sample visiting order for one epoch, a pure function of (seed, epoch).
std::vector<std::size_t> EpochOrder(std::size_t num_samples,
                                    std::uint64_t seed, int epoch);

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  // confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t total = 0;
};

EvalResult Evaluate(const Dataset& dataset, const Topology& topology,
                    const NeuronParams& params, const TrainConfig& config);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;  // NaN when not evaluated this epoch
  std::size_t skipped = 0;     // samples whose update was dropped
  double wall_seconds = 0.0;
};

struct TrainHooks {
  std::function<void(const EpochMetrics&, const Topology&)> on_epoch;
  std::function<void(const std::string&)> on_warning;
  // Checked after on_epoch; returning true ends training after that epoch.
  std::function<bool(const EpochMetrics&)> should_stop;
};

struct TrainResult {
  Topology topology;
  std::vector<EpochMetrics> history;
};

// Per-sample training (batch size 1): forward, S-PSP tableau, backward,
// regularization, Adam. Samples whose backward pass hits a singular system
// or produces non-finite gradients are skipped with a warning.
TrainResult Train(const Dataset& train, const Dataset* test,
                  Topology topology, const NeuronParams& params,
                  const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace strsbp

#endif  // STRSBP_OPTIMIZE_H_
