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

#ifndef STRSBP_SIMULATE_H_
#define STRSBP_SIMULATE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "strsbp/network.h"

namespace strsbp {

// Normalized double-exponential PSP kernel
//   eps(dt) = c * (exp(-dt / tau_m) - exp(-dt / tau_s)),  c = 1 / (1 - tau_s / tau_m)
// for dt >= 0, and 0 for dt < 0.
double PspKernel(double dt, const NeuronParams& params);

// Peak value of PspKernel over dt >= 0.
double PspPeak(const NeuronParams& params);

// Per-neuron simulation state. The membrane potential is
// trace_m - trace_s; both traces receive the same injections and decay with
// tau_m and tau_s respectively.
struct NeuronState {
  double trace_m = 0.0;
  double trace_s = 0.0;
  // First step at which the neuron accepts input and may fire again.
  std::int64_t refractory_until = 0;

  double potential() const { return trace_m - trace_s; }
};

struct SimulationOptions {
  bool lateral_inhibition = false;
  double inhibition_weight = 0.0;
  // Called after the fire decision of every non-input layer at every step
  // with the post-injection, pre-reset potentials.
  std::function<void(std::int64_t step, std::size_t layer,
                     std::span<const double> potentials)>
      observer;
};

// Adds the output layer's lateral inhibition to `injection`: every neuron
// that fired on the previous step pushes -inhibition_weight into the traces
// of every other output neuron.
void LateralInhibitionForward(std::span<const std::size_t> fired_previous_step,
                              double inhibition_weight,
                              std::span<double> injection);

// Time-stepped LIF simulation of every non-input layer. Input trains must
// have one entry per layer-0 neuron. Throws a validation Error on shape
// mismatch or a non-positive duration. Episode::tpsp is left empty.
Episode RunForward(const Topology& topology, const NeuronParams& params,
                   std::span<const SpikeTrain> input, double duration,
                   const SimulationOptions& options = {});

}  // namespace strsbp

#endif  // STRSBP_SIMULATE_H_
