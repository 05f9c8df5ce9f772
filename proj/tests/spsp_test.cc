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
#include <random>

#include <gtest/gtest.h>

#include "strsbp/error.h"
#include "strsbp/oracle.h"
#include "strsbp/simulate.h"
#include "strsbp/spsp.h"

namespace strsbp {
namespace {

constexpr double kEps5 = 0.44524272536824525;
constexpr double kEps2 = 0.21763708731993053;
constexpr double kEps4 = 0.38043703211524841;

SpikeTrain RandomTrain(std::mt19937_64& rng, double duration, double p,
                       double min_gap) {
  SpikeTrain train;
  std::bernoulli_distribution fire(p);
  double last = -1e9;
  for (int t = 0; t < static_cast<int>(duration); ++t) {
    if (t - last >= min_gap && fire(rng)) {
      train.times.push_back(t);
      last = t;
    }
  }
  return train;
}

Episode RandomEpisode(const Topology& topology, double duration,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SpikeTrain> input(topology.size(0));
  for (auto& t : input) t = RandomTrain(rng, duration, 0.15, 1);
  SimulationOptions options;
  return RunForward(topology, NeuronParams{}, input, duration, options);
}

Topology SmallRecurrent(std::uint64_t seed) {
  Topology t = InitWeights(
      Topology::Zeros({{LayerKind::kInput, 6, 0.0},
                       {LayerKind::kRecurrent, 3, 1.0},
                       {LayerKind::kFeedforward, 3, 0.0}}),
      seed);
  for (double& w : t.feedforward[1].values()) w = 3.0 * std::abs(w);
  for (double& w : t.feedforward[2].values()) w = 6.0 * std::abs(w);
  return t;
}

TEST(ComputeSpspTest, EmptyTrains) {
  const NeuronParams p;
  EXPECT_EQ(ComputeSpsp({}, {{6}}, p), 0.0);
  EXPECT_EQ(ComputeSpsp({{0}}, {}, p), 0.0);
}

TEST(ComputeSpspTest, SingleKernelEvaluation) {
  EXPECT_NEAR(ComputeSpsp({{0}}, {{6}}, NeuronParams{}), kEps5, 1e-15);
}

TEST(ComputeSpspTest, ArrivalsCountTowardTheNextFiringOnly) {
  const NeuronParams p;  // delay 1, refractory 2
  // Arrival at 1 contributes to the firing at 3 only.
  EXPECT_NEAR(ComputeSpsp({{0}}, {{3, 10}}, p), kEps2, 1e-15);
  // Arrival at 6 falls after the reset window [3, 5) and feeds the firing at 10.
  EXPECT_NEAR(ComputeSpsp({{5}}, {{3, 10}}, p), kEps4, 1e-15);
  // Arrival at 4 lands during the refractory period and is discarded.
  EXPECT_EQ(ComputeSpsp({{3}}, {{3, 10}}, p), 0.0);
  // Arrival after the last firing contributes nothing.
  EXPECT_EQ(ComputeSpsp({{12}}, {{3, 10}}, p), 0.0);
}

TEST(ComputeSpspTest, MatchesBruteForceOnRandomTrains) {
  std::mt19937_64 rng(3);
  const NeuronParams p;
  for (int trial = 0; trial < 500; ++trial) {
    const SpikeTrain pre = RandomTrain(rng, 200, 0.1, 1);
    const SpikeTrain post = RandomTrain(rng, 200, 0.05, 2);
    EXPECT_NEAR(ComputeSpsp(pre, post, p), oracle::BruteSpsp(pre, post, p), 1e-12)
        << "trial " << trial;
  }
}

TEST(ComputeSpspTest, MonotoneInAddedPreSpikes) {
  std::mt19937_64 rng(4);
  const NeuronParams p;
  for (int trial = 0; trial < 100; ++trial) {
    SpikeTrain pre = RandomTrain(rng, 150, 0.1, 1);
    const SpikeTrain post = RandomTrain(rng, 150, 0.05, 2);
    const double before = ComputeSpsp(pre, post, p);
    const double extra = std::uniform_int_distribution<int>(0, 149)(rng);
    if (std::find(pre.times.begin(), pre.times.end(), extra) != pre.times.end()) {
      continue;
    }
    pre.times.insert(std::upper_bound(pre.times.begin(), pre.times.end(), extra),
                     extra);
    EXPECT_GE(ComputeSpsp(pre, post, p), before);
  }
}

TEST(ComputeSpspTest, InvariantUnderTimeScaling) {
  std::mt19937_64 rng(5);
  const NeuronParams p;
  NeuronParams q = p;
  q.tau_m *= 2;
  q.tau_s *= 2;
  q.synaptic_delay *= 2;
  q.refractory *= 2;
  for (int trial = 0; trial < 100; ++trial) {
    const SpikeTrain pre = RandomTrain(rng, 100, 0.1, 1);
    const SpikeTrain post = RandomTrain(rng, 100, 0.08, 2);
    SpikeTrain pre2 = pre, post2 = post;
    for (double& t : pre2.times) t *= 2;
    for (double& t : post2.times) t *= 2;
    EXPECT_NEAR(ComputeSpsp(pre, post, p), ComputeSpsp(pre2, post2, q), 1e-12);
  }
}

TEST(ComputeTableauTest, SilentEpisodeGivesZeroTableau) {
  const Topology t = SmallRecurrent(1);
  const Episode ep = RunForward(t, NeuronParams{}, std::vector<SpikeTrain>(6), 100);
  const SpsapTableau tab = ComputeTableau(ep, t, NeuronParams{});
  for (std::size_t k = 1; k < t.num_layers(); ++k) {
    for (double x : tab.feedforward[k].e.values()) EXPECT_EQ(x, 0.0);
    for (double x : tab.feedforward[k].de_dpre.values()) EXPECT_EQ(x, 0.0);
    for (double x : tab.feedforward[k].de_dpost.values()) EXPECT_EQ(x, 0.0);
  }
  for (double x : tab.recurrent[1].e.values()) EXPECT_EQ(x, 0.0);
}

TEST(ComputeTableauTest, MatchesBruteForceAndGuardsSilentPre) {
  const NeuronParams p;
  const RateProportionalPartials partials;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Topology t = SmallRecurrent(seed);
    const Episode ep = RandomEpisode(t, 200, seed + 100);
    const SpsapTableau tab = ComputeTableau(ep, t, p, partials);
    for (std::size_t k = 1; k < t.num_layers(); ++k) {
      const SynapseBlock& ff = tab.feedforward[k];
      for (std::size_t l = 0; l < t.size(k); ++l) {
        for (std::size_t j = 0; j < t.size(k - 1); ++j) {
          const SpikeTrain& pre = ep.trains[k - 1][j];
          const SpikeTrain& post = ep.trains[k][l];
          EXPECT_NEAR(ff.e(l, j), oracle::BruteSpsp(pre, post, p), 1e-12);
          if (pre.empty()) {
            EXPECT_EQ(ff.de_dpre(l, j), 0.0);
          } else {
            EXPECT_NEAR(ff.de_dpre(l, j), ff.e(l, j) / pre.count(), 1e-15);
          }
          if (post.empty()) {
            EXPECT_EQ(ff.de_dpost(l, j), 0.0);
          } else {
            EXPECT_NEAR(ff.de_dpost(l, j), ff.e(l, j) / post.count(), 1e-15);
          }
          checked += ff.e(l, j) > 0.0;
        }
      }
    }
    for (std::size_t l = 0; l < 3; ++l) {
      for (std::size_t q = 0; q < 3; ++q) {
        EXPECT_NEAR(tab.recurrent[1].e(l, q),
                    oracle::BruteSpsp(ep.trains[1][q], ep.trains[1][l], p), 1e-12);
      }
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(ComputeTableauTest, DefaultPartialsIgnorePostCount) {
  const Topology t = SmallRecurrent(2);
  const Episode ep = RandomEpisode(t, 200, 7);
  const SpsapTableau tab = ComputeTableau(ep, t, NeuronParams{});
  for (std::size_t k = 1; k < t.num_layers(); ++k) {
    for (double x : tab.feedforward[k].de_dpost.values()) EXPECT_EQ(x, 0.0);
  }
}

TEST(ComputeTableauTest, ProbeSilentExposesInputOfSilentNeuron) {
  Topology t = Topology::Zeros({{LayerKind::kInput, 1, 0.0},
                                {LayerKind::kFeedforward, 1, 0.0}});
  t.feedforward[1](0, 0) = 0.5;
  const std::vector<SpikeTrain> input{{{0, 10, 20}}};
  const Episode ep = RunForward(t, NeuronParams{}, input, 40);
  ASSERT_EQ(ep.counts[1][0], 0);
  TableauOptions probe;
  probe.probe_silent = true;
  const PreRatePartials partials;
  EXPECT_EQ(ComputeTableau(ep, t, NeuronParams{}, partials).feedforward[1].e(0, 0), 0.0);
  const double probed =
      ComputeTableau(ep, t, NeuronParams{}, partials, probe).feedforward[1].e(0, 0);
  EXPECT_NEAR(probed, oracle::BruteSpsp(input[0], {{39}}, NeuronParams{}), 1e-12);
  EXPECT_GT(probed, 0.0);
}

TEST(ComputeTableauTest, RejectsMismatchedEpisode) {
  const Topology t = SmallRecurrent(1);
  Episode ep = RunForward(t, NeuronParams{}, std::vector<SpikeTrain>(6), 10);
  ep.trains.pop_back();
  EXPECT_THROW(ComputeTableau(ep, t, NeuronParams{}), Error);
}

TEST(ComputeTpspTest, HandCase) {
  Topology t = Topology::Zeros({{LayerKind::kInput, 2, 0.0},
                                {LayerKind::kFeedforward, 2, 0.0}});
  t.feedforward[1](0, 0) = 1;
  t.feedforward[1](0, 1) = 2;
  t.feedforward[1](1, 0) = 3;
  t.feedforward[1](1, 1) = 4;
  SpsapTableau tab;
  tab.feedforward.resize(2);
  tab.recurrent.resize(2);
  tab.feedforward[1].e = Matrix(2, 2);
  tab.feedforward[1].e(0, 0) = 0.5;
  tab.feedforward[1].e(0, 1) = 0.25;
  tab.feedforward[1].e(1, 0) = 0.1;
  tab.feedforward[1].e(1, 1) = 0.2;
  const auto a = ComputeTpsp(tab, t, 1);
  EXPECT_NEAR(a[0], 1.0, 1e-15);
  EXPECT_NEAR(a[1], 1.1, 1e-15);
}

TEST(ComputeTpspTest, RecurrentTermsAddedAndZeroWeightsGiveZero) {
  const Topology t = SmallRecurrent(3);
  const Episode ep = RandomEpisode(t, 200, 9);
  const SpsapTableau tab = ComputeTableau(ep, t, NeuronParams{});
  const auto a = ComputeTpsp(tab, t, 1);
  for (std::size_t l = 0; l < 3; ++l) {
    double expected = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      expected += t.feedforward[1](l, j) * tab.feedforward[1].e(l, j);
    }
    for (std::size_t q = 0; q < 3; ++q) {
      expected += t.recurrent[1](l, q) * tab.recurrent[1].e(l, q);
    }
    EXPECT_NEAR(a[l], expected, 1e-12);
  }
  const Topology zero = Topology::Zeros(t.layers);
  for (double x : ComputeTpsp(tab, zero, 1)) EXPECT_EQ(x, 0.0);
}

TEST(ActivationTest, Values) {
  EXPECT_EQ(Activation(0.0, 10.0), 0.0);
  EXPECT_EQ(Activation(350.0, 10.0), 35.0);
  EXPECT_EQ(Activation(2 * 7.3, 10.0), 2 * Activation(7.3, 10.0));
}

TEST(CountPartialsTest, FormsAndNames) {
  const RateProportionalPartials rp;
  const PreRatePartials pr;
  EXPECT_EQ(rp.WrtPre(6.0, 3.0, 2.0), 2.0);
  EXPECT_EQ(rp.WrtPost(6.0, 3.0, 2.0), 3.0);
  EXPECT_EQ(rp.WrtPre(6.0, 0.0, 2.0), 0.0);
  EXPECT_EQ(rp.WrtPost(6.0, 3.0, 0.0), 0.0);
  EXPECT_EQ(pr.WrtPre(6.0, 3.0, 2.0), 2.0);
  EXPECT_EQ(pr.WrtPost(6.0, 3.0, 2.0), 0.0);
  EXPECT_EQ(ParsePartialsKind("pre_rate"), PartialsKind::kPreRate);
  EXPECT_EQ(ParsePartialsKind("rate_proportional"), PartialsKind::kRateProportional);
  EXPECT_STREQ(PartialsKindName(PartialsKind::kRateProportional), "rate_proportional");
  EXPECT_THROW(ParsePartialsKind("bogus"), Error);
}

}  // namespace
}  // namespace strsbp
