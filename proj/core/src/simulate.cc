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

#include "strsbp/simulate.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "strsbp/error.h"

namespace strsbp {

double PspKernel(double dt, const NeuronParams& params) {
  if (dt < 0.0) return 0.0;
  const double c = 1.0 / (1.0 - params.tau_s / params.tau_m);
  return c * (std::exp(-dt / params.tau_m) - std::exp(-dt / params.tau_s));
}

double PspPeak(const NeuronParams& params) {
  const double ratio = params.tau_s / params.tau_m;
  const double c = 1.0 / (1.0 - ratio);
  const double span = params.tau_m - params.tau_s;
  return c * (std::pow(ratio, params.tau_s / span) -
              std::pow(ratio, params.tau_m / span));
}

void LateralInhibitionForward(std::span<const std::size_t> fired_previous_step,
                              double inhibition_weight,
                              std::span<double> injection) {
  if (inhibition_weight == 0.0 || fired_previous_step.empty()) return;
  const double total =
      inhibition_weight * static_cast<double>(fired_previous_step.size());
  for (double& x : injection) x -= total;
  // A neuron does not inhibit itself.
  for (std::size_t i : fired_previous_step) injection[i] += inhibition_weight;
}

Episode RunForward(const Topology& topology, const NeuronParams& params,
                   std::span<const SpikeTrain> input, double duration,
                   const SimulationOptions& options) {
  const std::size_t num_layers = topology.num_layers();
  if (num_layers < 2) throw ValidationError("topology has no trained layer");
  if (input.size() != topology.size(0)) {
    throw ValidationError("input has " + std::to_string(input.size()) +
                          " trains, layer 0 has " +
                          std::to_string(topology.size(0)) + " neurons");
  }
  const std::int64_t num_steps = params.Steps(duration);
  if (!(duration > 0.0) || num_steps <= 0) {
    throw ValidationError("episode duration must be positive");
  }
  const std::int64_t delay = params.Steps(params.synaptic_delay);
  const std::int64_t refractory = params.Steps(params.refractory);
  const double decay_m = std::exp(-params.sim_step / params.tau_m);
  const double decay_s = std::exp(-params.sim_step / params.tau_s);
  const double c = 1.0 / (1.0 - params.tau_s / params.tau_m);

  // fired[layer][step] lists neurons spiking at that step.
  std::vector<std::vector<std::vector<std::size_t>>> fired(num_layers);
  for (auto& per_step : fired) per_step.resize(num_steps);
  for (std::size_t j = 0; j < input.size(); ++j) {
    for (double t : input[j].times) {
      const std::int64_t step = params.Steps(t);
      if (step < 0 || step >= num_steps) {
        throw ValidationError("input spike at " + std::to_string(t) +
                              " ms outside episode");
      }
      fired[0][step].push_back(j);
    }
  }

  // Transposed weights so that each arriving spike adds one contiguous row.
  std::vector<Matrix> ff_by_source(num_layers);
  std::vector<Matrix> rec_by_source(num_layers);
  for (std::size_t k = 1; k < num_layers; ++k) {
    ff_by_source[k] = Transpose(topology.feedforward[k]);
    if (topology.IsRecurrent(k)) rec_by_source[k] = Transpose(topology.recurrent[k]);
  }

  Episode episode;
  episode.duration = duration;
  episode.trains.resize(num_layers);
  episode.counts.resize(num_layers);
  episode.tpsp.resize(num_layers);
  episode.trains[0].assign(input.begin(), input.end());
  for (std::size_t k = 1; k < num_layers; ++k) {
    episode.trains[k].resize(topology.size(k));
  }

  std::vector<std::vector<NeuronState>> state(num_layers);
  for (std::size_t k = 1; k < num_layers; ++k) state[k].resize(topology.size(k));
  std::vector<double> drive;
  std::vector<double> injection;
  std::vector<double> potentials;
  const std::size_t output = topology.output_layer();
  const bool inhibit =
      options.lateral_inhibition && options.inhibition_weight != 0.0;

  for (std::int64_t step = 0; step < num_steps; ++step) {
    for (std::size_t k = 1; k < num_layers; ++k) {
      const std::size_t n = topology.size(k);
      drive.assign(n, 0.0);
      injection.assign(n, 0.0);
      if (step >= delay) {
        for (std::size_t j : fired[k - 1][step - delay]) {
          auto w = ff_by_source[k].row(j);
          for (std::size_t i = 0; i < n; ++i) drive[i] += w[i];
        }
        if (topology.IsRecurrent(k)) {
          for (std::size_t p : fired[k][step - delay]) {
            auto w = rec_by_source[k].row(p);
            for (std::size_t i = 0; i < n; ++i) drive[i] += w[i];
          }
        }
      }
      if (inhibit && k == output && step >= 1) {
        LateralInhibitionForward(fired[k][step - 1], options.inhibition_weight,
                                 injection);
      }

      const double threshold = params.Threshold(k);
      potentials.assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        NeuronState& s = state[k][i];
        s.trace_m *= decay_m;
        s.trace_s *= decay_s;
        if (step < s.refractory_until) continue;
        const double in = c * drive[i] + injection[i];
        s.trace_m += in;
        s.trace_s += in;
        const double u = s.potential();
        potentials[i] = u;
        if (u >= threshold) {
          fired[k][step].push_back(i);
          episode.trains[k][i].times.push_back(static_cast<double>(step) *
                                               params.sim_step);
          s.trace_m = 0.0;
          s.trace_s = 0.0;
          s.refractory_until = step + std::max<std::int64_t>(refractory, 1);
        }
      }
      if (options.observer) options.observer(step, k, potentials);
    }
  }

  for (std::size_t k = 0; k < num_layers; ++k) {
    episode.counts[k].reserve(episode.trains[k].size());
    for (const SpikeTrain& train : episode.trains[k]) {
      episode.counts[k].push_back(static_cast<int>(train.count()));
    }
  }
  return episode;
}

}  // namespace strsbp
