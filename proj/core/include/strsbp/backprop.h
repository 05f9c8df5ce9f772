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

#ifndef STRSBP_BACKPROP_H_
#define STRSBP_BACKPROP_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "strsbp/matrix.h"
#include "strsbp/network.h"
#include "strsbp/spsp.h"

namespace strsbp {

// Coupled sensitivity system between layer k-1 and layer k:
//   (diag(omega) - theta) * p = phi,  p(l, i) = d a^k_l / d a^{k-1}_i.
struct LayerSystem {
  std::size_t layer = 0;
  std::vector<double> omega;  // diagonal, size N_k
  Matrix theta;               // N_k x N_k, zero diagonal
  Matrix phi;                 // N_k x N_{k-1}
};

// dE/dw for every weight matrix, shaped like the Topology.
struct GradientSet {
  std::vector<Matrix> feedforward;
  std::vector<Matrix> recurrent;

  static GradientSet ZerosLike(const Topology& topology);
};

bool AllFinite(const GradientSet& g);
double MaxAbsDifference(const GradientSet& a, const GradientSet& b);
double MaxAbs(const GradientSet& g);

enum class Solver { kExact, kTaylor };

const char* SolverName(Solver solver);
// Parses "exact" or "taylor"; throws a validation Error.
Solver ParseSolver(const std::string& name);

// Pivots, diagonal entries and denominators at or below this magnitude are
// treated as singular.
inline constexpr double kSingularTolerance = 1e-12;

// delta_i = (o_i - y_i) / threshold.
std::vector<double> OutputDelta(std::span<const double> counts,
                                std::span<const double> labels,
                                double threshold);

// omega_l = 1 - (1/nu^k) * (sum_j w_lj de_lj/do_l [+ sum_p w_lp de_lp/do_l]).
// The recurrent sum is included when `layer` is recurrent.
std::vector<double> SelfSensitivityDiagonal(const SpsapTableau& tableau,
                                            const Topology& topology,
                                            const NeuronParams& params,
                                            std::size_t layer);

// Builds omega, theta and phi for recurrent layer `layer`. Throws a
// validation Error if the layer is not recurrent.
LayerSystem AssembleRecurrentSystem(const SpsapTableau& tableau,
                                    const Topology& topology,
                                    const NeuronParams& params,
                                    std::size_t layer);

// p = (Omega - Theta)^{-1} Phi via LU with partial pivoting. Throws a numeric
// Error naming the layer if the matrix is singular to working precision.
Matrix SolvePExact(const LayerSystem& system);

// First-order expansion p = (Omega^{-1} + Omega^{-1} Theta Omega^{-1}) Phi.
// Throws a numeric Error on a zero diagonal entry of Omega.
Matrix SolvePTaylor(const LayerSystem& system);

Matrix SolveP(const LayerSystem& system, Solver solver);

// Closed-form p for a layer without recurrent connections:
// p_li = w_li (1/nu^{k-1}) de_li/do_i / omega_l.
Matrix FeedforwardP(const SpsapTableau& tableau, const Topology& topology,
                    const NeuronParams& params, std::size_t layer);

// delta^{k-1} = p^T delta^k.
std::vector<double> PropagateDelta(const Matrix& p,
                                   std::span<const double> delta_next);

// Errors for every non-input layer: deltas[k] for k >= 1, deltas[0] empty.
// `output_delta` seeds the output layer.
std::vector<std::vector<double>> BackpropagateDeltas(
    const SpsapTableau& tableau, const Topology& topology,
    const NeuronParams& params, std::span<const double> output_delta,
    Solver solver);

// dE/dw_ij = z_i * e_ij where z = (Omega - Theta)^{-T} delta for the layer
// owning the weight (Theta = 0 for feedforward layers, so z_i =
// delta_i / omega_i). Masked recurrent entries stay zero.
GradientSet WeightGradients(const SpsapTableau& tableau,
                            const Topology& topology,
                            const NeuronParams& params,
                            const std::vector<std::vector<double>>& deltas,
                            Solver solver);

struct BackwardOptions {
  Solver solver = Solver::kExact;
};

// Full backward pass from real-valued output activations.
GradientSet Backward(const SpsapTableau& tableau, const Topology& topology,
                     const NeuronParams& params,
                     std::span<const double> output_counts,
                     std::span<const double> labels,
                     const BackwardOptions& options = {});

// Full backward pass for a simulated episode; output counts are the observed
// firing counts.
GradientSet Backward(const Episode& episode, const SpsapTableau& tableau,
                     const Topology& topology, const NeuronParams& params,
                     std::span<const double> labels,
                     const BackwardOptions& options = {});

}  // namespace strsbp

#endif  // STRSBP_BACKPROP_H_
