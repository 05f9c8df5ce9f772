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

#ifndef STRSBP_ORACLE_H_
#define STRSBP_ORACLE_H_

// Reference engines that recompute production results by independent,
// deliberately naive routes. Intended for tests and the gradcheck command;
// none of this is used on the training path.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "strsbp/backprop.h"
#include "strsbp/matrix.h"
#include "strsbp/network.h"
#include "strsbp/spsp.h"

namespace strsbp::oracle {

// Literal double loop over (post firing, pre spike) pairs with the kernel
// written out inline. Same windowing rule as ComputeSpsp.
double BruteSpsp(const SpikeTrain& pre, const SpikeTrain& post,
                 const NeuronParams& params);

// Textbook Gaussian elimination with partial pivoting on a copy of `a`.
// Throws a numeric Error when a pivot vanishes.
std::vector<double> GaussianSolve(Matrix a, std::vector<double> b);

// For every layer k >= 1, P^{k,k-1} obtained by writing the chain-rule
// relations for all N_k * N_{k-1} unknowns d a^k_l / d a^{k-1}_i term by term
// (no grouping into a diagonal Omega) and solving the stacked dense system.
// Index 0 of the result is empty.
std::vector<Matrix> NaiveSensitivities(const SpsapTableau& tableau,
                                       const Topology& topology,
                                       const NeuronParams& params);

// Gradients from the naive sensitivities: deltas propagate through the
// stacked-system P matrices, and d a / d w is solved per weight from the
// unreduced self-consistency relations.
GradientSet NaiveGradients(const SpsapTableau& tableau,
                           const Topology& topology, const NeuronParams& params,
                           std::span<const double> output_counts,
                           std::span<const double> labels);

// Smooth stand-in for spiking S-PSPs with exactly known count partials:
//   e_ij(o_pre, o_post) = o_pre * (base_ij + coupling_ij * o_post)
// so de/do_pre = base + coupling * o_post and de/do_post = coupling * o_pre.
struct SurrogateNet {
  Topology topology;
  NeuronParams params;
  std::vector<Matrix> ff_base;
  std::vector<Matrix> ff_coupling;
  std::vector<Matrix> rec_base;
  std::vector<Matrix> rec_coupling;
};

struct SurrogateOptions {
  double min_threshold = 1.5;
  double max_threshold = 3.0;
  double recurrent_scale = 0.3;
  double max_coupling = 0.1;
};

// Random coefficients and weights for `layers`; every recurrent layer is
// given the requested density.
SurrogateNet MakeSurrogateNet(std::span<const LayerSpec> layers,
                              std::uint64_t seed,
                              const SurrogateOptions& options = {});

struct SurrogateSolution {
  // activations[k] = a^k for k >= 1; activations[0] = input rates.
  std::vector<std::vector<double>> activations;
  double loss = 0.0;
  int iterations = 0;
  // Largest fixed-point residual |a - F(a)| over all layers.
  double residual = 0.0;
};

// Solves a^k = F_k(a^k) layer by layer with damped iteration
// (a <- 0.5 a + 0.5 F(a)) to `tolerance`. Throws a numeric Error when the
// iteration cap is reached.
SurrogateSolution SurrogateForward(const SurrogateNet& net,
                                   std::span<const double> input_rates,
                                   std::span<const double> labels,
                                   double tolerance = 1e-12,
                                   int max_iterations = 10000);

// Exact S-PSPs and partials of `net` at `solution`.
SpsapTableau SurrogateTableau(const SurrogateNet& net,
                              const SurrogateSolution& solution);

// a^K / nu^K at the solution.
std::vector<double> SurrogateOutputCounts(const SurrogateNet& net,
                                          const SurrogateSolution& solution);

// Central differences (E(w + h) - E(w - h)) / 2h for every trainable weight,
// evaluated in extended precision.
GradientSet FiniteDiffGradient(const SurrogateNet& net,
                               std::span<const double> input_rates,
                               std::span<const double> labels, double h);

struct GradCheckOptions {
  int instances = 25;
  std::uint64_t seed = 0;
  std::size_t max_neurons = 5;
  std::size_t max_layers = 3;  // including the input layer
  double h = 1e-5;
  double fd_tolerance = 1e-4;
  double naive_tolerance = 1e-10;
  double magnitude_floor = 1e-8;
  Solver solver = Solver::kExact;
  // Negative control: replace the production gradient by the uncoupled
  // per-neuron rational form (no Theta coupling, feedforward weights of
  // recurrent layers use only the feedforward denominator).
  bool inject_fault = false;
};

struct GradCheckReport {
  int instances = 0;
  std::size_t entries_checked = 0;
  double max_fd_relative_error = 0.0;
  double max_naive_gradient_error = 0.0;
  double max_naive_p_error = 0.0;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

GradCheckReport RunGradientCheck(const GradCheckOptions& options);

// The uncoupled rational-form gradient used by the negative control.
GradientSet UncoupledGradients(const SpsapTableau& tableau,
                               const Topology& topology,
                               const NeuronParams& params,
                               const std::vector<std::vector<double>>& deltas);

}  // namespace strsbp::oracle

#endif  // STRSBP_ORACLE_H_
