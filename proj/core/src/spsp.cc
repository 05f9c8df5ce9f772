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

#include "strsbp/spsp.h"

#include <algorithm>
#include <cstdint>

#include "strsbp/error.h"
#include "strsbp/simulate.h"

namespace strsbp {
namespace {

std::vector<std::int64_t> ToSteps(const SpikeTrain& train,
                                  const NeuronParams& params) {
  std::vector<std::int64_t> steps;
  steps.reserve(train.count());
  for (double t : train.times) steps.push_back(params.Steps(t));
  return steps;
}

// For every arrival step in [0, num_steps), the step of the post firing that
// arrival contributes to, or -1 when it is discarded or never followed by a
// firing.
std::vector<std::int64_t> FiringTargets(std::span<const std::int64_t> firings,
                                        std::int64_t num_steps,
                                        std::int64_t refractory) {
  std::vector<std::int64_t> target(num_steps, -1);
  std::int64_t window_start = 0;
  for (std::int64_t fire : firings) {
    for (std::int64_t a = std::max<std::int64_t>(window_start, 0);
         a <= fire && a < num_steps; ++a) {
      target[a] = fire;
    }
    window_start = fire + std::max<std::int64_t>(refractory, 1);
  }
  return target;
}

void CheckEpisode(const Episode& episode, const Topology& topology) {
  if (episode.trains.size() != topology.num_layers()) {
    throw ValidationError("episode has " +
                          std::to_string(episode.trains.size()) +
                          " layers, topology has " +
                          std::to_string(topology.num_layers()));
  }
  for (std::size_t k = 0; k < topology.num_layers(); ++k) {
    if (episode.trains[k].size() != topology.size(k) ||
        episode.counts.size() != topology.num_layers() ||
        episode.counts[k].size() != topology.size(k)) {
      throw ValidationError("episode layer " + std::to_string(k) +
                            " does not match topology size");
    }
  }
}

void FillBlock(const std::vector<std::vector<std::int64_t>>& pre_steps,
               std::span<const int> pre_counts,
               const std::vector<std::vector<std::int64_t>>& post_steps,
               std::span<const int> post_counts,
               std::span<const double> kernel_table, std::int64_t delay,
               std::int64_t refractory, std::int64_t num_steps,
               const CountPartials& partials, bool probe_silent,
               SynapseBlock& block) {
  const std::size_t rows = post_steps.size();
  const std::size_t cols = pre_steps.size();
  block.e = Matrix(rows, cols);
  block.de_dpre = Matrix(rows, cols);
  block.de_dpost = Matrix(rows, cols);
  for (std::size_t l = 0; l < rows; ++l) {
    std::vector<std::int64_t> probe;
    std::span<const std::int64_t> firings = post_steps[l];
    if (firings.empty()) {
      if (!probe_silent) continue;
      probe.push_back(num_steps - 1);
      firings = probe;
    }
    const auto target = FiringTargets(firings, num_steps, refractory);
    auto e_row = block.e.row(l);
    for (std::size_t j = 0; j < cols; ++j) {
      double e = 0.0;
      for (std::int64_t s : pre_steps[j]) {
        const std::int64_t a = s + delay;
        if (a >= num_steps) break;
        const std::int64_t fire = target[a];
        if (fire >= 0) e += kernel_table[fire - a];
      }
      e_row[j] = e;
    }
    for (std::size_t j = 0; j < cols; ++j) {
      const double pre = pre_counts[j];
      const double post = post_counts[l];
      block.de_dpre(l, j) = partials.WrtPre(e_row[j], pre, post);
      block.de_dpost(l, j) = partials.WrtPost(e_row[j], pre, post);
    }
  }
}

}  // namespace

double RateProportionalPartials::WrtPre(double e, double pre_count,
                                        double) const {
  return pre_count > 0.0 ? e / pre_count : 0.0;
}
double RateProportionalPartials::WrtPost(double e, double,
                                         double post_count) const {
  return post_count > 0.0 ? e / post_count : 0.0;
}

double PreRatePartials::WrtPre(double e, double pre_count, double) const {
  return pre_count > 0.0 ? e / pre_count : 0.0;
}
double PreRatePartials::WrtPost(double, double, double) const { return 0.0; }

std::unique_ptr<CountPartials> MakeCountPartials(PartialsKind kind) {
  switch (kind) {
    case PartialsKind::kRateProportional:
      return std::make_unique<RateProportionalPartials>();
    case PartialsKind::kPreRate:
      break;
  }
  return std::make_unique<PreRatePartials>();
}

const char* PartialsKindName(PartialsKind kind) {
  return kind == PartialsKind::kRateProportional ? "rate_proportional"
                                                 : "pre_rate";
}

PartialsKind ParsePartialsKind(const std::string& name) {
  if (name == "pre_rate") return PartialsKind::kPreRate;
  if (name == "rate_proportional") return PartialsKind::kRateProportional;
  throw ValidationError("unknown partials model '" + name + "'");
}

double ComputeSpsp(const SpikeTrain& pre, const SpikeTrain& post,
                   const NeuronParams& params) {
  if (pre.empty() || post.empty()) return 0.0;
  const std::int64_t delay = params.Steps(params.synaptic_delay);
  const std::int64_t refractory =
      std::max<std::int64_t>(params.Steps(params.refractory), 1);
  const auto firings = ToSteps(post, params);
  double e = 0.0;
  // Two pointers: for each arrival, the first firing at or after it.
  std::size_t f = 0;
  for (double t : pre.times) {
    const std::int64_t a = params.Steps(t) + delay;
    while (f < firings.size() && firings[f] < a) ++f;
    if (f == firings.size()) break;
    const std::int64_t window_start = f == 0 ? 0 : firings[f - 1] + refractory;
    if (a < window_start) continue;
    e += PspKernel(static_cast<double>(firings[f] - a) * params.sim_step,
                   params);
  }
  return e;
}

SpsapTableau ComputeTableau(const Episode& episode, const Topology& topology,
                            const NeuronParams& params,
                            const CountPartials& partials,
                            const TableauOptions& options) {
  CheckEpisode(episode, topology);
  const std::int64_t num_steps = params.Steps(episode.duration);
  const std::int64_t delay = params.Steps(params.synaptic_delay);
  const std::int64_t refractory = params.Steps(params.refractory);
  std::vector<double> kernel_table(std::max<std::int64_t>(num_steps, 1));
  for (std::size_t i = 0; i < kernel_table.size(); ++i) {
    kernel_table[i] =
        PspKernel(static_cast<double>(static_cast<std::int64_t>(i)) *
                      params.sim_step,
                  params);
  }

  std::vector<std::vector<std::vector<std::int64_t>>> steps(
      topology.num_layers());
  for (std::size_t k = 0; k < topology.num_layers(); ++k) {
    for (const SpikeTrain& train : episode.trains[k]) {
      steps[k].push_back(ToSteps(train, params));
    }
  }

  SpsapTableau tableau;
  tableau.feedforward.resize(topology.num_layers());
  tableau.recurrent.resize(topology.num_layers());
  for (std::size_t k = 1; k < topology.num_layers(); ++k) {
    FillBlock(steps[k - 1], episode.counts[k - 1], steps[k], episode.counts[k],
              kernel_table, delay, refractory, num_steps, partials,
              options.probe_silent, tableau.feedforward[k]);
    if (topology.IsRecurrent(k)) {
      FillBlock(steps[k], episode.counts[k], steps[k], episode.counts[k],
                kernel_table, delay, refractory, num_steps, partials,
                options.probe_silent, tableau.recurrent[k]);
    }
  }
  return tableau;
}

SpsapTableau ComputeTableau(const Episode& episode, const Topology& topology,
                            const NeuronParams& params) {
  return ComputeTableau(episode, topology, params, PreRatePartials());
}

std::vector<double> ComputeTpsp(const SpsapTableau& tableau,
                                const Topology& topology, std::size_t layer) {
  const std::size_t n = topology.size(layer);
  std::vector<double> a(n, 0.0);
  const Matrix& w = topology.feedforward[layer];
  const Matrix& e = tableau.feedforward[layer].e;
  for (std::size_t l = 0; l < n; ++l) {
    double sum = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) sum += w(l, j) * e(l, j);
    a[l] = sum;
  }
  if (topology.IsRecurrent(layer)) {
    const Matrix& wr = topology.recurrent[layer];
    const Matrix& er = tableau.recurrent[layer].e;
    for (std::size_t l = 0; l < n; ++l) {
      double sum = 0.0;
      for (std::size_t p = 0; p < n; ++p) sum += wr(l, p) * er(l, p);
      a[l] += sum;
    }
  }
  return a;
}

void FillTpsp(Episode& episode, const SpsapTableau& tableau,
              const Topology& topology) {
  episode.tpsp.assign(topology.num_layers(), {});
  for (std::size_t k = 1; k < topology.num_layers(); ++k) {
    episode.tpsp[k] = ComputeTpsp(tableau, topology, k);
  }
}

}  // namespace strsbp
