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

#include "strsbp/backprop.h"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "strsbp/error.h"
#include "strsbp/linalg.h"

namespace strsbp {
namespace {

std::string LayerLabel(std::size_t k) { return "layer " + std::to_string(k); }

Matrix BuildPhi(const SpsapTableau& tableau, const Topology& topology,
                const NeuronParams& params, std::size_t layer) {
  const Matrix& w = topology.feedforward[layer];
  const Matrix& de_dpre = tableau.feedforward[layer].de_dpre;
  const double inv_nu_pre = 1.0 / params.Threshold(layer - 1);
  Matrix phi(w.rows(), w.cols());
  for (std::size_t l = 0; l < w.rows(); ++l) {
    for (std::size_t i = 0; i < w.cols(); ++i) {
      phi(l, i) = w(l, i) * inv_nu_pre * de_dpre(l, i);
    }
  }
  return phi;
}

Matrix BuildTheta(const SpsapTableau& tableau, const Topology& topology,
                  const NeuronParams& params, std::size_t layer) {
  const Matrix& w = topology.recurrent[layer];
  const Matrix& de_dpre = tableau.recurrent[layer].de_dpre;
  const double inv_nu = 1.0 / params.Threshold(layer);
  Matrix theta(w.rows(), w.cols());
  for (std::size_t l = 0; l < w.rows(); ++l) {
    for (std::size_t p = 0; p < w.cols(); ++p) {
      if (p != l) theta(l, p) = w(l, p) * inv_nu * de_dpre(l, p);
    }
  }
  return theta;
}

Matrix SystemMatrix(const LayerSystem& system) {
  Matrix a = system.theta;
  for (double& x : a.values()) x = -x;
  for (std::size_t l = 0; l < system.omega.size(); ++l) a(l, l) += system.omega[l];
  return a;
}

void CheckOmega(std::span<const double> omega, std::size_t layer) {
  for (std::size_t l = 0; l < omega.size(); ++l) {
    if (std::abs(omega[l]) <= kSingularTolerance || !std::isfinite(omega[l])) {
      throw NumericError("vanishing self-sensitivity denominator at neuron " +
                         std::to_string(l) + " of " + LayerLabel(layer));
    }
  }
}

// z = (Omega - Theta)^{-T} delta for `layer`, or its first-order expansion.
std::vector<double> LayerAdjoint(const SpsapTableau& tableau,
                                 const Topology& topology,
                                 const NeuronParams& params, std::size_t layer,
                                 std::span<const double> delta, Solver solver) {
  const std::vector<double> omega =
      SelfSensitivityDiagonal(tableau, topology, params, layer);
  if (!topology.IsRecurrent(layer)) {
    CheckOmega(omega, layer);
    std::vector<double> z(delta.size());
    for (std::size_t l = 0; l < z.size(); ++l) z[l] = delta[l] / omega[l];
    return z;
  }
  LayerSystem system;
  system.layer = layer;
  system.omega = omega;
  system.theta = BuildTheta(tableau, topology, params, layer);
  if (solver == Solver::kTaylor) {
    CheckOmega(omega, layer);
    std::vector<double> scaled(delta.size());
    for (std::size_t l = 0; l < scaled.size(); ++l) {
      scaled[l] = delta[l] / omega[l];
    }
    std::vector<double> z = MultiplyTransposed(system.theta, scaled);
    for (std::size_t l = 0; l < z.size(); ++l) {
      z[l] = scaled[l] + z[l] / omega[l];
    }
    return z;
  }
  LuDecomposition lu(SystemMatrix(system), kSingularTolerance);
  if (lu.singular()) {
    throw NumericError("singular sensitivity system at " + LayerLabel(layer));
  }
  return lu.SolveTransposed(delta);
}

}  // namespace

GradientSet GradientSet::ZerosLike(const Topology& topology) {
  GradientSet g;
  g.feedforward.resize(topology.num_layers());
  g.recurrent.resize(topology.num_layers());
  for (std::size_t k = 1; k < topology.num_layers(); ++k) {
    g.feedforward[k] = Matrix(topology.feedforward[k].rows(),
                              topology.feedforward[k].cols());
    if (topology.IsRecurrent(k)) {
      g.recurrent[k] =
          Matrix(topology.recurrent[k].rows(), topology.recurrent[k].cols());
    }
  }
  return g;
}

bool AllFinite(const GradientSet& g) {
  return std::all_of(g.feedforward.begin(), g.feedforward.end(),
                     [](const Matrix& m) { return AllFinite(m); }) &&
         std::all_of(g.recurrent.begin(), g.recurrent.end(),
                     [](const Matrix& m) { return AllFinite(m); });
}

double MaxAbsDifference(const GradientSet& a, const GradientSet& b) {
  assert(a.feedforward.size() == b.feedforward.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.feedforward.size(); ++k) {
    worst = std::max(worst, MaxAbsDifference(a.feedforward[k], b.feedforward[k]));
    worst = std::max(worst, MaxAbsDifference(a.recurrent[k], b.recurrent[k]));
  }
  return worst;
}

double MaxAbs(const GradientSet& g) {
  double worst = 0.0;
  for (const auto* group : {&g.feedforward, &g.recurrent}) {
    for (const Matrix& m : *group) {
      for (double x : m.values()) worst = std::max(worst, std::abs(x));
    }
  }
  return worst;
}

const char* SolverName(Solver solver) {
  return solver == Solver::kTaylor ? "taylor" : "exact";
}

Solver ParseSolver(const std::string& name) {
  if (name == "exact") return Solver::kExact;
  if (name == "taylor") return Solver::kTaylor;
  throw ValidationError("unknown solver '" + name + "' (expected exact|taylor)");
}

std::vector<double> OutputDelta(std::span<const double> counts,
                                std::span<const double> labels,
                                double threshold) {
  assert(counts.size() == labels.size());
  std::vector<double> delta(counts.size());
  for (std::size_t i = 0; i < delta.size(); ++i) {
    delta[i] = (counts[i] - labels[i]) / threshold;
  }
  return delta;
}

std::vector<double> SelfSensitivityDiagonal(const SpsapTableau& tableau,
                                            const Topology& topology,
                                            const NeuronParams& params,
                                            std::size_t layer) {
  const std::size_t n = topology.size(layer);
  const double inv_nu = 1.0 / params.Threshold(layer);
  std::vector<double> omega(n);
  const Matrix& w = topology.feedforward[layer];
  const Matrix& d = tableau.feedforward[layer].de_dpost;
  const bool recurrent = topology.IsRecurrent(layer);
  for (std::size_t l = 0; l < n; ++l) {
    double sum = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) sum += w(l, j) * d(l, j);
    if (recurrent) {
      const Matrix& wr = topology.recurrent[layer];
      const Matrix& dr = tableau.recurrent[layer].de_dpost;
      for (std::size_t p = 0; p < n; ++p) sum += wr(l, p) * dr(l, p);
    }
    omega[l] = 1.0 - inv_nu * sum;
  }
  return omega;
}

LayerSystem AssembleRecurrentSystem(const SpsapTableau& tableau,
                                    const Topology& topology,
                                    const NeuronParams& params,
                                    std::size_t layer) {
  if (layer == 0 || layer >= topology.num_layers() ||
      !topology.IsRecurrent(layer)) {
    throw ValidationError(LayerLabel(layer) + " is not recurrent");
  }
  LayerSystem system;
  system.layer = layer;
  system.omega = SelfSensitivityDiagonal(tableau, topology, params, layer);
  system.theta = BuildTheta(tableau, topology, params, layer);
  system.phi = BuildPhi(tableau, topology, params, layer);
  return system;
}

Matrix SolvePExact(const LayerSystem& system) {
  LuDecomposition lu(SystemMatrix(system), kSingularTolerance);
  if (lu.singular()) {
    throw NumericError("singular sensitivity system at " +
                       LayerLabel(system.layer));
  }
  return lu.Solve(system.phi);
}

Matrix SolvePTaylor(const LayerSystem& system) {
  CheckOmega(system.omega, system.layer);
  const std::size_t n = system.omega.size();
  // q = Omega^{-1} Phi, then p = q + Omega^{-1} Theta q.
  Matrix q = system.phi;
  for (std::size_t l = 0; l < n; ++l) {
    const double inv = 1.0 / system.omega[l];
    for (double& x : q.row(l)) x *= inv;
  }
  Matrix p = Multiply(system.theta, q);
  for (std::size_t l = 0; l < n; ++l) {
    const double inv = 1.0 / system.omega[l];
    auto p_row = p.row(l);
    auto q_row = q.row(l);
    for (std::size_t i = 0; i < p_row.size(); ++i) {
      p_row[i] = q_row[i] + p_row[i] * inv;
    }
  }
  return p;
}

Matrix SolveP(const LayerSystem& system, Solver solver) {
  return solver == Solver::kTaylor ? SolvePTaylor(system) : SolvePExact(system);
}

Matrix FeedforwardP(const SpsapTableau& tableau, const Topology& topology,
                    const NeuronParams& params, std::size_t layer) {
  if (layer == 0 || layer >= topology.num_layers() ||
      topology.IsRecurrent(layer)) {
    throw ValidationError(LayerLabel(layer) + " is not a feedforward layer");
  }
  const std::vector<double> omega =
      SelfSensitivityDiagonal(tableau, topology, params, layer);
  CheckOmega(omega, layer);
  Matrix p = BuildPhi(tableau, topology, params, layer);
  for (std::size_t l = 0; l < p.rows(); ++l) {
    for (double& x : p.row(l)) x /= omega[l];
  }
  return p;
}

std::vector<double> PropagateDelta(const Matrix& p,
                                   std::span<const double> delta_next) {
  return MultiplyTransposed(p, delta_next);
}

std::vector<std::vector<double>> BackpropagateDeltas(
    const SpsapTableau& tableau, const Topology& topology,
    const NeuronParams& params, std::span<const double> output_delta,
    Solver solver) {
  const std::size_t output = topology.output_layer();
  std::vector<std::vector<double>> deltas(topology.num_layers());
  deltas[output].assign(output_delta.begin(), output_delta.end());
  // delta^{k-1} = P^T delta^k = Phi^T (Omega - Theta)^{-T} delta^k, which
  // needs one transposed solve instead of a solve per upstream neuron.
  for (std::size_t k = output; k >= 2; --k) {
    const std::vector<double> z =
        LayerAdjoint(tableau, topology, params, k, deltas[k], solver);
    deltas[k - 1] =
        MultiplyTransposed(BuildPhi(tableau, topology, params, k), z);
  }
  return deltas;
}

GradientSet WeightGradients(const SpsapTableau& tableau,
                            const Topology& topology,
                            const NeuronParams& params,
                            const std::vector<std::vector<double>>& deltas,
                            Solver solver) {
  GradientSet g = GradientSet::ZerosLike(topology);
  for (std::size_t k = 1; k < topology.num_layers(); ++k) {
    const std::vector<double> z =
        LayerAdjoint(tableau, topology, params, k, deltas[k], solver);
    const Matrix& e = tableau.feedforward[k].e;
    for (std::size_t l = 0; l < z.size(); ++l) {
      auto g_row = g.feedforward[k].row(l);
      auto e_row = e.row(l);
      for (std::size_t j = 0; j < g_row.size(); ++j) g_row[j] = z[l] * e_row[j];
    }
    if (!topology.IsRecurrent(k)) continue;
    const Matrix& er = tableau.recurrent[k].e;
    const Matrix& mask = topology.recurrent_mask[k];
    for (std::size_t l = 0; l < z.size(); ++l) {
      for (std::size_t p = 0; p < z.size(); ++p) {
        if (mask(l, p) != 0.0) g.recurrent[k](l, p) = z[l] * er(l, p);
      }
    }
  }
  return g;
}

GradientSet Backward(const SpsapTableau& tableau, const Topology& topology,
                     const NeuronParams& params,
                     std::span<const double> output_counts,
                     std::span<const double> labels,
                     const BackwardOptions& options) {
  const std::size_t output = topology.output_layer();
  if (output_counts.size() != topology.size(output) ||
      labels.size() != topology.size(output)) {
    throw ValidationError("label/count length does not match output layer");
  }
  const std::vector<double> delta =
      OutputDelta(output_counts, labels, params.Threshold(output));
  const auto deltas =
      BackpropagateDeltas(tableau, topology, params, delta, options.solver);
  return WeightGradients(tableau, topology, params, deltas, options.solver);
}

GradientSet Backward(const Episode& episode, const SpsapTableau& tableau,
                     const Topology& topology, const NeuronParams& params,
                     std::span<const double> labels,
                     const BackwardOptions& options) {
  const auto& counts = episode.counts.at(topology.output_layer());
  std::vector<double> o(counts.begin(), counts.end());
  return Backward(tableau, topology, params, o, labels, options);
}

}  // namespace strsbp
