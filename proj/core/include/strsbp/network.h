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

#ifndef STRSBP_NETWORK_H_
#define STRSBP_NETWORK_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "strsbp/matrix.h"

namespace strsbp {

// LIF neuron and synapse constants shared by every layer. Times in ms,
// potentials in mV. Defaults follow the reference parameter table.
struct NeuronParams {
  double tau_m = 64.0;
  double tau_s = 8.0;
  // Threshold used for any layer without an explicit entry in `thresholds`.
  double default_threshold = 10.0;
  // Optional per-layer thresholds, indexed by layer. Either empty or one entry
  // per layer; the input layer's entry is never used by the dynamics.
  std::vector<double> thresholds;
  double refractory = 2.0;
  double reset_voltage = 0.0;
  double synaptic_delay = 1.0;
  double sim_step = 1.0;

  double Threshold(std::size_t layer) const {
    return layer < thresholds.size() ? thresholds[layer] : default_threshold;
  }
  // Converts a duration in ms to a whole number of simulation steps.
  std::int64_t Steps(double ms) const;
};

enum class LayerKind { kInput, kFeedforward, kRecurrent };

const char* LayerKindName(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kFeedforward;
  std::size_t size = 1;
  // Fraction of off-diagonal intra-layer connections present. Zero unless
  // kind == kRecurrent.
  double recurrent_density = 0.0;
};

// Layers plus trainable weights. feedforward[k] holds W^{k,k-1}
// (size[k] x size[k-1]) for k >= 1; recurrent[k] holds W^{k,k} for recurrent
// layers and is empty otherwise. recurrent_mask[k] is 1 where an intra-layer
// connection exists and 0 elsewhere, including the diagonal.
struct Topology {
  std::vector<LayerSpec> layers;
  std::vector<Matrix> feedforward;
  std::vector<Matrix> recurrent;
  std::vector<Matrix> recurrent_mask;

  // Zero weights with shapes matching `layers`. Recurrent masks allow every
  // off-diagonal connection until InitWeights draws the sparse pattern.
  static Topology Zeros(std::vector<LayerSpec> layers);

  std::size_t num_layers() const { return layers.size(); }
  std::size_t output_layer() const { return layers.size() - 1; }
  std::size_t size(std::size_t layer) const { return layers[layer].size; }
  bool IsRecurrent(std::size_t layer) const {
    return layers[layer].kind == LayerKind::kRecurrent;
  }
};

// Spike times of one neuron in one episode, ms, strictly increasing.
struct SpikeTrain {
  std::vector<double> times;

  std::size_t count() const { return times.size(); }
  bool empty() const { return times.empty(); }
  friend bool operator==(const SpikeTrain&, const SpikeTrain&) = default;
};

// Full forward record of one sample.
struct Episode {
  double duration = 0.0;
  // trains[layer][neuron]
  std::vector<std::vector<SpikeTrain>> trains;
  // counts[layer][neuron] == trains[layer][neuron].count()
  std::vector<std::vector<int>> counts;
  // T-PSP per layer; empty for the input layer and until FillTpsp runs.
  std::vector<std::vector<double>> tpsp;
};

struct Violation {
  std::string where;
  std::string rule;
};

std::string FormatViolations(std::span<const Violation> violations);

std::vector<Violation> ValidateParams(const NeuronParams& params,
                                      std::size_t num_layers);

// Checks every structural and numeric invariant of the topology and params.
// An empty result means the pair is usable.
std::vector<Violation> Validate(const Topology& topology,
                                const NeuronParams& params);

// Checks a spike train against ordering, grid and range rules. The refractory
// gap is only enforced when check_refractory is set (input trains are pure
// sources and may fire on consecutive steps).
std::vector<Violation> ValidateSpikeTrain(const SpikeTrain& train,
                                          const NeuronParams& params,
                                          double duration,
                                          bool check_refractory);

// Draws every feedforward weight and the recurrent sparsity masks plus weights
// from U[-1, 1] using a generator seeded by `seed`. A recurrent layer of size
// N and density d receives exactly floor(d * N * (N - 1)) connections.
// Throws a validation Error if the topology shapes are inconsistent.
Topology InitWeights(const Topology& topology, std::uint64_t seed);

}  // namespace strsbp

#endif  // STRSBP_NETWORK_H_
