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

#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "strsbp/backprop.h"
#include "strsbp/simulate.h"
#include "strsbp/spsp.h"

namespace strsbp {
namespace {

std::vector<SpikeTrain> RandomInput(std::size_t n, int steps, double p,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution fire(p);
  std::vector<SpikeTrain> input(n);
  for (auto& t : input) {
    for (int s = 0; s < steps; ++s) {
      if (fire(rng)) t.times.push_back(s);
    }
  }
  return input;
}

using Trace = std::vector<std::vector<double>>;  // [step][neuron]

Trace Potentials(const Topology& t, const NeuronParams& params,
                 const std::vector<SpikeTrain>& input, double duration,
                 Episode* episode = nullptr) {
  Trace trace;
  SimulationOptions o;
  o.observer = [&](std::int64_t, std::size_t layer, std::span<const double> u) {
    if (layer == 1) trace.emplace_back(u.begin(), u.end());
  };
  Episode e = RunForward(t, params, input, duration, o);
  if (episode) *episode = std::move(e);
  return trace;
}

Topology SingleLayer(std::size_t in, std::size_t out, std::uint64_t seed) {
  return InitWeights(Topology::Zeros({{LayerKind::kInput, in, 0.0},
                                      {LayerKind::kFeedforward, out, 0.0}}),
                     seed);
}

TEST(PropertyTest, SubthresholdPotentialIsLinear) {
  NeuronParams params;
  params.default_threshold = 1e9;
  const Topology t = SingleLayer(5, 3, 1);
  Topology doubled = t;
  for (double& w : doubled.feedforward[1].values()) w *= 2.0;
  const auto a = RandomInput(5, 120, 0.1, 2);
  const auto b = RandomInput(5, 120, 0.1, 3);
  std::vector<SpikeTrain> both(5);
  for (std::size_t i = 0; i < 5; ++i) {
    std::merge(a[i].times.begin(), a[i].times.end(), b[i].times.begin(),
               b[i].times.end(), std::back_inserter(both[i].times));
    both[i].times.erase(std::unique(both[i].times.begin(), both[i].times.end()),
                        both[i].times.end());
  }
  // Deduplicated union equals the sum only where a and b do not overlap, so
  // compare against a run with overlapping spikes removed from b.
  std::vector<SpikeTrain> b_only(5);
  for (std::size_t i = 0; i < 5; ++i) {
    std::set_difference(b[i].times.begin(), b[i].times.end(), a[i].times.begin(),
                        a[i].times.end(), std::back_inserter(b_only[i].times));
  }
  const Trace ua = Potentials(t, params, a, 120);
  const Trace ub = Potentials(t, params, b_only, 120);
  const Trace uab = Potentials(t, params, both, 120);
  const Trace u2 = Potentials(doubled, params, a, 120);
  for (std::size_t s = 0; s < ua.size(); ++s) {
    for (std::size_t l = 0; l < 3; ++l) {
      EXPECT_NEAR(uab[s][l], ua[s][l] + ub[s][l], 1e-9);
      EXPECT_NEAR(u2[s][l], 2.0 * ua[s][l], 1e-9);
    }
  }
}

TEST(PropertyTest, Causality) {
  NeuronParams params;
  params.default_threshold = 1.0;
  params.synaptic_delay = 3.0;
  const Topology t = InitWeights(Topology::Zeros({{LayerKind::kInput, 4, 0.0},
                                                  {LayerKind::kRecurrent, 6, 0.5},
                                                  {LayerKind::kFeedforward, 2, 0.0}}),
                                 5);
  auto input = RandomInput(4, 100, 0.1, 6);
  const Trace before = Potentials(t, params, input, 100);
  input[2].times.push_back(99.0);
  input[0].times.insert(std::lower_bound(input[0].times.begin(), input[0].times.end(), 60.0), 60.0);
  input[0].times.erase(std::unique(input[0].times.begin(), input[0].times.end()),
                       input[0].times.end());
  const Trace after = Potentials(t, params, input, 100);
  for (std::size_t s = 0; s < 63; ++s) EXPECT_EQ(before[s], after[s]) << "step " << s;
}

TEST(PropertyTest, Deterministic) {
  NeuronParams params;
  params.default_threshold = 1.5;
  const Topology t = InitWeights(Topology::Zeros({{LayerKind::kInput, 8, 0.0},
                                                  {LayerKind::kRecurrent, 10, 0.3},
                                                  {LayerKind::kFeedforward, 3, 0.0}}),
                                 7);
  const auto input = RandomInput(8, 200, 0.1, 8);
  const Episode a = RunForward(t, params, input, 200);
  const Episode b = RunForward(t, params, input, 200);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(a.counts[k], b.counts[k]);
    for (std::size_t i = 0; i < a.trains[k].size(); ++i) {
      EXPECT_EQ(a.trains[k][i].times, b.trains[k][i].times);
    }
  }
  const SpsapTableau ta = ComputeTableau(a, t, params);
  const SpsapTableau tb = ComputeTableau(b, t, params);
  EXPECT_EQ(ta.recurrent[1].e, tb.recurrent[1].e);
}

TEST(PropertyTest, SilencedRecurrenceDegeneratesToFeedforward) {
  NeuronParams params;
  params.default_threshold = 1.5;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Topology rec = InitWeights(Topology::Zeros({{LayerKind::kInput, 6, 0.0},
                                                {LayerKind::kRecurrent, 5, 0.5},
                                                {LayerKind::kFeedforward, 3, 0.0}}),
                               seed);
    for (double& w : rec.recurrent[1].values()) w = 0.0;
    Topology ff = Topology::Zeros({{LayerKind::kInput, 6, 0.0},
                                   {LayerKind::kFeedforward, 5, 0.0},
                                   {LayerKind::kFeedforward, 3, 0.0}});
    ff.feedforward = rec.feedforward;
    const auto input = RandomInput(6, 150, 0.15, seed);
    const Episode er = RunForward(rec, params, input, 150);
    const Episode ef = RunForward(ff, params, input, 150);
    for (std::size_t k = 1; k < 3; ++k) ASSERT_EQ(er.counts[k], ef.counts[k]);
    TableauOptions opt;
    opt.probe_silent = true;
    const PreRatePartials partials;
    const std::vector<double> y{3, 1, 1};
    const GradientSet gr = Backward(er, ComputeTableau(er, rec, params, partials, opt),
                                    rec, params, y);
    const GradientSet gf = Backward(ef, ComputeTableau(ef, ff, params, partials, opt),
                                    ff, params, y);
    for (std::size_t k = 1; k < 3; ++k) {
      EXPECT_LE(MaxAbsDifference(gr.feedforward[k], gf.feedforward[k]), 1e-12)
          << "seed " << seed;
    }
  }
}

LayerSystem RandomSystem(std::size_t n, std::size_t m, double q_target,
                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LayerSystem s;
  s.omega.resize(n);
  for (double& w : s.omega) w = 1.0 + std::abs(u(rng));
  s.theta = Matrix(n, n);
  s.phi = Matrix(n, m);
  for (std::size_t l = 0; l < n; ++l) {
    double row = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      if (p == l) continue;
      s.theta(l, p) = u(rng);
      row += std::abs(s.theta(l, p));
    }
    // Scale row l so that its row sum of |Omega^{-1} Theta| is q_target.
    for (std::size_t p = 0; p < n; ++p) {
      if (row > 0) s.theta(l, p) *= q_target * s.omega[l] / row;
    }
    for (std::size_t i = 0; i < m; ++i) s.phi(l, i) = u(rng);
  }
  return s;
}

TEST(PropertyTest, TaylorErrorWithinNeumannBound) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const double q = 0.02 + 0.18 * trial / 49.0;
    const LayerSystem s = RandomSystem(2 + trial % 20, 3, q, rng);
    Matrix omega_inv_phi = s.phi;
    for (std::size_t l = 0; l < s.omega.size(); ++l) {
      for (double& x : omega_inv_phi.row(l)) x /= s.omega[l];
    }
    const double bound = q * q / (1.0 - q) * InfNorm(omega_inv_phi);
    const double err = InfNorm([&] {
      Matrix d = SolvePTaylor(s);
      const Matrix e = SolvePExact(s);
      for (std::size_t i = 0; i < d.values().size(); ++i) d.values()[i] -= e.values()[i];
      return d;
    }());
    EXPECT_LE(err, bound * (1 + 1e-9) + 1e-15) << "trial " << trial;
  }
}

TEST(PropertyTest, MaskedGradientsAreZero) {
  NeuronParams params;
  params.default_threshold = 1.5;
  const Topology t = InitWeights(Topology::Zeros({{LayerKind::kInput, 6, 0.0},
                                                  {LayerKind::kRecurrent, 8, 0.3},
                                                  {LayerKind::kFeedforward, 3, 0.0}}),
                                 4);
  const Episode e = RunForward(t, params, RandomInput(6, 150, 0.15, 4), 150);
  TableauOptions opt;
  opt.probe_silent = true;
  const GradientSet g =
      Backward(e, ComputeTableau(e, t, params, PreRatePartials(), opt), t, params,
               std::vector<double>{4, 1, 1});
  int nonzero = 0;
  for (std::size_t i = 0; i < 64; ++i) {
    if (t.recurrent_mask[1].values()[i] == 0.0) {
      EXPECT_EQ(g.recurrent[1].values()[i], 0.0);
    } else {
      nonzero += g.recurrent[1].values()[i] != 0.0;
    }
  }
  EXPECT_GT(nonzero, 0);
}

// With e / o_post as the post-count partial, the self term of omega is
// a_l / (nu o_l), and a_l sums the potentials at o_l firings, each >= nu.
TEST(PropertyTest, RateProportionalPartialsMakeOmegaNonPositive) {
  NeuronParams params;
  params.default_threshold = 1.5;
  int firing_neurons = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Topology t = InitWeights(Topology::Zeros({{LayerKind::kInput, 6, 0.0},
                                                    {LayerKind::kRecurrent, 6, 0.5},
                                                    {LayerKind::kFeedforward, 3, 0.0}}),
                                   seed);
    Episode e;
    std::vector<double> sum_at_fire(6, 0.0);
    const Trace trace = Potentials(t, params, RandomInput(6, 150, 0.2, seed), 150, &e);
    for (std::size_t l = 0; l < 6; ++l) {
      for (double time : e.trains[1][l].times) {
        const double u = trace[static_cast<std::size_t>(time)][l];
        EXPECT_GE(u, params.Threshold(1));
        sum_at_fire[l] += u;
      }
    }
    const SpsapTableau tab =
        ComputeTableau(e, t, params, RateProportionalPartials(), TableauOptions{});
    const auto a = ComputeTpsp(tab, t, 1);
    const auto omega = SelfSensitivityDiagonal(tab, t, params, 1);
    for (std::size_t l = 0; l < 6; ++l) {
      EXPECT_NEAR(a[l], sum_at_fire[l], 1e-9 * std::max(1.0, std::abs(a[l])));
      if (e.counts[1][l] == 0) continue;
      ++firing_neurons;
      EXPECT_GE(a[l], params.Threshold(1) * e.counts[1][l] - 1e-9);
      EXPECT_LE(omega[l], 1e-9);
    }
  }
  EXPECT_GT(firing_neurons, 10);
}

}  // namespace
}  // namespace strsbp
