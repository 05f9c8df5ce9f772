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

#ifndef STRSBP_SPSP_H_
#define STRSBP_SPSP_H_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "strsbp/matrix.h"
#include "strsbp/network.h"

namespace strsbp {

// S-PSP values and their count sensitivities for one weight matrix, laid out
// post x pre like the weights.
struct SynapseBlock {
  Matrix e;
  Matrix de_dpre;   // d e_lj / d o_j
  Matrix de_dpost;  // d e_lj / d o_l
};

// Backward-pass working set, indexed by post-synaptic layer like Topology:
// feedforward[k] covers (k-1 -> k); recurrent[k] covers (k -> k) and is
// empty for non-recurrent layers.
struct SpsapTableau {
  std::vector<SynapseBlock> feedforward;
  std::vector<SynapseBlock> recurrent;
};

// Estimates d e / d o for a synapse from its S-PSP and the two firing counts.
class CountPartials {
 public:
  virtual ~CountPartials() = default;
  virtual double WrtPre(double e, double pre_count, double post_count) const = 0;
  virtual double WrtPost(double e, double pre_count, double post_count) const = 0;
};

// Treats each spike's marginal contribution as the average one: e / o for
// both sides, zero when the count is zero.
class RateProportionalPartials final : public CountPartials {
 public:
  double WrtPre(double e, double pre_count, double post_count) const override;
  double WrtPost(double e, double pre_count, double post_count) const override;
};

// e / o_pre for the pre-synaptic side; the S-PSP is treated as insensitive
// to the post-synaptic count.
class PreRatePartials final : public CountPartials {
 public:
  double WrtPre(double e, double pre_count, double post_count) const override;
  double WrtPost(double e, double pre_count, double post_count) const override;
};

enum class PartialsKind { kPreRate, kRateProportional };

std::unique_ptr<CountPartials> MakeCountPartials(PartialsKind kind);
const char* PartialsKindName(PartialsKind kind);
// Parses "pre_rate" or "rate_proportional"; throws a validation Error.
PartialsKind ParsePartialsKind(const std::string& name);

// Spike-train level PSP from `pre` onto `post`: the sum, over each post
// firing, of the kernel responses to the pre spikes that arrived (after the
// synaptic delay) since the post neuron last came out of reset. Arrivals
// during the refractory period are discarded exactly as in RunForward, so
// sum_j w_lj e_lj reproduces the potential at each firing time.
double ComputeSpsp(const SpikeTrain& pre, const SpikeTrain& post,
                   const NeuronParams& params);

struct TableauOptions {
  // When set, a post-synaptic neuron that never fired is probed as if it fired
  // once on the last step of the episode, so its S-PSPs (and hence its
  // gradients) reflect the input it received. Observed counts are unchanged.
  bool probe_silent = false;
};

// Fills S-PSPs for every weight matrix of the topology plus count partials.
// Throws a validation Error if the episode does not match the topology.
SpsapTableau ComputeTableau(const Episode& episode, const Topology& topology,
                            const NeuronParams& params,
                            const CountPartials& partials,
                            const TableauOptions& options = {});
SpsapTableau ComputeTableau(const Episode& episode, const Topology& topology,
                            const NeuronParams& params);

// T-PSP of layer k: sum_j w_lj e_lj plus the intra-layer sum when recurrent.
std::vector<double> ComputeTpsp(const SpsapTableau& tableau,
                                const Topology& topology, std::size_t layer);

// Stores ComputeTpsp for every non-input layer into episode.tpsp.
void FillTpsp(Episode& episode, const SpsapTableau& tableau,
              const Topology& topology);

// Spike-train level activation o = a / threshold.
inline double Activation(double a, double threshold) { return a / threshold; }

}  // namespace strsbp

#endif  // STRSBP_SPSP_H_
