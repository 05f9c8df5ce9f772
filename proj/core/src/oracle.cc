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

#include "strsbp/oracle.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <utility>

#include "strsbp/error.h"

namespace strsbp::oracle {
namespace {

// Selects one weight to shift by `delta` during a surrogate evaluation.
struct Perturbation {
  std::size_t layer = 0;
  bool recurrent = false;
  std::size_t row = 0;
  std::size_t col = 0;
  long double delta = 0.0L;
};

template <typename T>
T WeightAt(const SurrogateNet& net, std::size_t k, bool recurrent,
           std::size_t row, std::size_t col, const Perturbation* shift) {
  const Matrix& w =
      recurrent ? net.topology.recurrent[k] : net.topology.feedforward[k];
  T value = static_cast<T>(w(row, col));
  if (shift && shift->layer == k && shift->recurrent == recurrent &&
      shift->row == row && shift->col == col) {
    value += static_cast<T>(shift->delta);
  }
  return value;
}

template <typename T>
struct SurrogateResult {
  std::vector<std::vector<T>> activations;
  T loss = 0;
  int iterations = 0;
  T residual = 0;
};

template <typename T>
SurrogateResult<T> Solve(const SurrogateNet& net,
                         std::span<const double> input_rates,
                         std::span<const double> labels, T tolerance,
                         int max_iterations, const Perturbation* shift) {
  const Topology& topo = net.topology;
  SurrogateResult<T> out;
  out.activations.resize(topo.num_layers());
  out.activations[0].assign(input_rates.begin(), input_rates.end());
  for (std::size_t k = 1; k < topo.num_layers(); ++k) {
    const std::size_t n = topo.size(k);
    const T nu = static_cast<T>(net.params.Threshold(k));
    std::vector<T> o_prev(topo.size(k - 1));
    for (std::size_t j = 0; j < o_prev.size(); ++j) {
      o_prev[j] = k == 1 ? out.activations[0][j]
                         : out.activations[k - 1][j] /
                               static_cast<T>(net.params.Threshold(k - 1));
    }
    // Feedforward part: a_l = sum_j w o_j (b + c a_l / nu) is linear in a_l.
    std::vector<T> ff_const(n, 0), ff_slope(n, 0);
    for (std::size_t l = 0; l < n; ++l) {
      for (std::size_t j = 0; j < o_prev.size(); ++j) {
        const T w = WeightAt<T>(net, k, false, l, j, shift);
        ff_const[l] += w * o_prev[j] * static_cast<T>(net.ff_base[k](l, j));
        ff_slope[l] +=
            w * o_prev[j] * static_cast<T>(net.ff_coupling[k](l, j)) / nu;
      }
    }
    auto apply = [&](const std::vector<T>& a) {
      std::vector<T> f(n);
      for (std::size_t l = 0; l < n; ++l) {
        T sum = ff_const[l] + ff_slope[l] * a[l];
        if (topo.IsRecurrent(k)) {
          for (std::size_t p = 0; p < n; ++p) {
            if (topo.recurrent_mask[k](l, p) == 0.0) continue;
            const T w = WeightAt<T>(net, k, true, l, p, shift);
            const T o_p = a[p] / nu;
            sum += w * o_p *
                   (static_cast<T>(net.rec_base[k](l, p)) +
                    static_cast<T>(net.rec_coupling[k](l, p)) * a[l] / nu);
          }
        }
        f[l] = sum;
      }
      return f;
    };
    std::vector<T> a(n, 0);
    if (!topo.IsRecurrent(k)) {
      for (std::size_t l = 0; l < n; ++l) a[l] = ff_const[l] / (1 - ff_slope[l]);
    } else {
      bool converged = false;
      for (int it = 0; it < max_iterations; ++it) {
        const std::vector<T> f = apply(a);
        T diff = 0, scale = 1;
        for (std::size_t l = 0; l < n; ++l) {
          diff = std::max(diff, std::abs(f[l] - a[l]));
          scale = std::max(scale, std::abs(a[l]));
        }
        out.iterations = std::max(out.iterations, it + 1);
        if (diff <= tolerance * scale) {
          a = f;
          converged = true;
          break;
        }
        for (std::size_t l = 0; l < n; ++l) a[l] = T(0.5) * a[l] + T(0.5) * f[l];
      }
      if (!converged) {
        throw NumericError("surrogate fixed point did not converge at layer " +
                           std::to_string(k));
      }
    }
    const std::vector<T> f = apply(a);
    for (std::size_t l = 0; l < n; ++l) {
      out.residual = std::max(out.residual, std::abs(f[l] - a[l]));
    }
    out.activations[k] = std::move(a);
  }
  const std::size_t last = topo.output_layer();
  const T nu_out = static_cast<T>(net.params.Threshold(last));
  for (std::size_t l = 0; l < labels.size(); ++l) {
    const T d = out.activations[last][l] / nu_out - static_cast<T>(labels[l]);
    out.loss += d * d / 2;
  }
  return out;
}

Matrix RandomMatrix(std::size_t rows, std::size_t cols, double lo, double hi,
                    std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (double& x : m.values()) x = u(rng);
  return m;
}

// Matrix of the unreduced per-weight relations of layer k:
// s_m - (1/nu) [sum_q w_mq de_mq/do_m s_m + sum_p w_mp (de_mp/do_m s_m +
// de_mp/do_p s_p)] = rhs_m.
Matrix WeightSensitivityMatrix(const SpsapTableau& tableau,
                               const Topology& topology,
                               const NeuronParams& params, std::size_t k) {
  const std::size_t n = topology.size(k);
  const double inv_nu = 1.0 / params.Threshold(k);
  Matrix m = Matrix::Identity(n);
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t q = 0; q < topology.size(k - 1); ++q) {
      m(row, row) -= topology.feedforward[k](row, q) * inv_nu *
                     tableau.feedforward[k].de_dpost(row, q);
    }
    if (!topology.IsRecurrent(k)) continue;
    for (std::size_t p = 0; p < n; ++p) {
      const double w = topology.recurrent[k](row, p);
      m(row, row) -= w * inv_nu * tableau.recurrent[k].de_dpost(row, p);
      m(row, p) -= w * inv_nu * tableau.recurrent[k].de_dpre(row, p);
    }
  }
  return m;
}

std::string EntryName(std::size_t k, bool recurrent, std::size_t r,
                      std::size_t c) {
  std::ostringstream s;
  s << "layer " << k << (recurrent ? " recurrent(" : " feedforward(") << r
    << "," << c << ")";
  return s.str();
}

}  // namespace

double BruteSpsp(const SpikeTrain& pre, const SpikeTrain& post,
                 const NeuronParams& params) {
  const double c = 1.0 / (1.0 - params.tau_s / params.tau_m);
  const double dead_time = std::max(params.refractory, params.sim_step);
  const double slack = 1e-9 * params.sim_step;
  double e = 0.0;
  for (std::size_t f = 0; f < post.times.size(); ++f) {
    const double fire = post.times[f];
    const double start = f == 0 ? 0.0 : post.times[f - 1] + dead_time;
    for (double spike : pre.times) {
      const double arrival = spike + params.synaptic_delay;
      if (arrival < start - slack || arrival > fire + slack) continue;
      const double dt = fire - arrival;
      e += c * (std::exp(-dt / params.tau_m) - std::exp(-dt / params.tau_s));
    }
  }
  return e;
}

std::vector<double> GaussianSolve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (std::abs(a(pivot, col)) < 1e-300) {
      throw NumericError("singular stacked system");
    }
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a(r, col) / a(col, col);
      for (std::size_t c = col; c < n; ++c) a(r, c) -= factor * a(col, c);
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double sum = b[r];
    for (std::size_t c = r + 1; c < n; ++c) sum -= a(r, c) * x[c];
    x[r] = sum / a(r, r);
  }
  return x;
}

std::vector<Matrix> NaiveSensitivities(const SpsapTableau& tableau,
                                       const Topology& topology,
                                       const NeuronParams& params) {
  std::vector<Matrix> out(topology.num_layers());
  for (std::size_t k = 1; k < topology.num_layers(); ++k) {
    const std::size_t n_post = topology.size(k);
    const std::size_t n_pre = topology.size(k - 1);
    const double nu_post = params.Threshold(k);
    const double nu_pre = params.Threshold(k - 1);
    const auto idx = [n_pre](std::size_t l, std::size_t i) {
      return l * n_pre + i;
    };
    const std::size_t unknowns = n_post * n_pre;
    Matrix m = Matrix::Identity(unknowns);
    std::vector<double> b(unknowns, 0.0);
    const SynapseBlock& ff = tableau.feedforward[k];
    for (std::size_t l = 0; l < n_post; ++l) {
      for (std::size_t i = 0; i < n_pre; ++i) {
        const std::size_t row = idx(l, i);
        // Feedforward synapses: the pre-count path exists only for j == i,
        // the post-count path for every j.
        for (std::size_t j = 0; j < n_pre; ++j) {
          const double w = topology.feedforward[k](l, j);
          if (j == i) b[row] += w * ff.de_dpre(l, j) / nu_pre;
          m(row, idx(l, i)) -= w * ff.de_dpost(l, j) / nu_post;
        }
        if (!topology.IsRecurrent(k)) continue;
        const SynapseBlock& rec = tableau.recurrent[k];
        for (std::size_t p = 0; p < n_post; ++p) {
          const double w = topology.recurrent[k](l, p);
          m(row, idx(l, i)) -= w * rec.de_dpost(l, p) / nu_post;
          m(row, idx(p, i)) -= w * rec.de_dpre(l, p) / nu_post;
        }
      }
    }
    const std::vector<double> x = GaussianSolve(std::move(m), std::move(b));
    out[k] = Matrix(n_post, n_pre);
    for (std::size_t l = 0; l < n_post; ++l) {
      for (std::size_t i = 0; i < n_pre; ++i) out[k](l, i) = x[idx(l, i)];
    }
  }
  return out;
}

GradientSet NaiveGradients(const SpsapTableau& tableau,
                           const Topology& topology, const NeuronParams& params,
                           std::span<const double> output_counts,
                           std::span<const double> labels) {
  const std::vector<Matrix> p = NaiveSensitivities(tableau, topology, params);
  const std::size_t last = topology.output_layer();
  std::vector<std::vector<double>> deltas(topology.num_layers());
  deltas[last].resize(topology.size(last));
  for (std::size_t i = 0; i < deltas[last].size(); ++i) {
    deltas[last][i] = (output_counts[i] - labels[i]) / params.Threshold(last);
  }
  for (std::size_t k = last; k >= 2; --k) {
    deltas[k - 1].assign(topology.size(k - 1), 0.0);
    for (std::size_t i = 0; i < topology.size(k - 1); ++i) {
      for (std::size_t l = 0; l < topology.size(k); ++l) {
        deltas[k - 1][i] += deltas[k][l] * p[k](l, i);
      }
    }
  }

  GradientSet g = GradientSet::ZerosLike(topology);
  for (std::size_t k = 1; k < topology.num_layers(); ++k) {
    const std::size_t n = topology.size(k);
    const Matrix m = WeightSensitivityMatrix(tableau, topology, params, k);
    auto gradient_for = [&](std::size_t owner, double e) {
      std::vector<double> rhs(n, 0.0);
      rhs[owner] = e;
      const std::vector<double> s = GaussianSolve(m, std::move(rhs));
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += deltas[k][i] * s[i];
      return sum;
    };
    for (std::size_t l = 0; l < n; ++l) {
      for (std::size_t j = 0; j < topology.size(k - 1); ++j) {
        g.feedforward[k](l, j) =
            gradient_for(l, tableau.feedforward[k].e(l, j));
      }
      if (!topology.IsRecurrent(k)) continue;
      for (std::size_t q = 0; q < n; ++q) {
        if (topology.recurrent_mask[k](l, q) == 0.0) continue;
        g.recurrent[k](l, q) = gradient_for(l, tableau.recurrent[k].e(l, q));
      }
    }
  }
  return g;
}

SurrogateNet MakeSurrogateNet(std::span<const LayerSpec> layers,
                              std::uint64_t seed,
                              const SurrogateOptions& options) {
  std::mt19937_64 rng(seed);
  SurrogateNet net;
  net.topology = InitWeights(
      Topology::Zeros(std::vector<LayerSpec>(layers.begin(), layers.end())),
      rng());
  std::uniform_real_distribution<double> threshold(options.min_threshold,
                                                   options.max_threshold);
  for (std::size_t k = 0; k < layers.size(); ++k) {
    net.params.thresholds.push_back(threshold(rng));
  }
  const std::size_t n = layers.size();
  net.ff_base.resize(n);
  net.ff_coupling.resize(n);
  net.rec_base.resize(n);
  net.rec_coupling.resize(n);
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t rows = layers[k].size;
    net.ff_base[k] = RandomMatrix(rows, layers[k - 1].size, 0.5, 1.5, rng);
    net.ff_coupling[k] =
        RandomMatrix(rows, layers[k - 1].size, 0.0, options.max_coupling, rng);
    if (!net.topology.IsRecurrent(k)) continue;
    for (double& w : net.topology.recurrent[k].values()) {
      w *= options.recurrent_scale;
    }
    net.rec_base[k] = RandomMatrix(rows, rows, 0.5, 1.5, rng);
    net.rec_coupling[k] = RandomMatrix(rows, rows, 0.0, options.max_coupling, rng);
  }
  return net;
}

SurrogateSolution SurrogateForward(const SurrogateNet& net,
                                   std::span<const double> input_rates,
                                   std::span<const double> labels,
                                   double tolerance, int max_iterations) {
  const auto r = Solve<double>(net, input_rates, labels, tolerance,
                               max_iterations, nullptr);
  SurrogateSolution out;
  out.activations = r.activations;
  out.loss = r.loss;
  out.iterations = r.iterations;
  out.residual = r.residual;
  return out;
}

SpsapTableau SurrogateTableau(const SurrogateNet& net,
                              const SurrogateSolution& solution) {
  const Topology& topo = net.topology;
  SpsapTableau t;
  t.feedforward.resize(topo.num_layers());
  t.recurrent.resize(topo.num_layers());
  for (std::size_t k = 1; k < topo.num_layers(); ++k) {
    const std::size_t n = topo.size(k);
    const double nu = net.params.Threshold(k);
    std::vector<double> o_pre(topo.size(k - 1));
    for (std::size_t j = 0; j < o_pre.size(); ++j) {
      o_pre[j] = k == 1 ? solution.activations[0][j]
                        : solution.activations[k - 1][j] /
                              net.params.Threshold(k - 1);
    }
    std::vector<double> o(n);
    for (std::size_t l = 0; l < n; ++l) o[l] = solution.activations[k][l] / nu;

    SynapseBlock& ff = t.feedforward[k];
    ff.e = Matrix(n, o_pre.size());
    ff.de_dpre = Matrix(n, o_pre.size());
    ff.de_dpost = Matrix(n, o_pre.size());
    for (std::size_t l = 0; l < n; ++l) {
      for (std::size_t j = 0; j < o_pre.size(); ++j) {
        const double b = net.ff_base[k](l, j);
        const double c = net.ff_coupling[k](l, j);
        ff.e(l, j) = o_pre[j] * (b + c * o[l]);
        ff.de_dpre(l, j) = b + c * o[l];
        ff.de_dpost(l, j) = c * o_pre[j];
      }
    }
    if (!topo.IsRecurrent(k)) continue;
    SynapseBlock& rec = t.recurrent[k];
    rec.e = Matrix(n, n);
    rec.de_dpre = Matrix(n, n);
    rec.de_dpost = Matrix(n, n);
    for (std::size_t l = 0; l < n; ++l) {
      for (std::size_t p = 0; p < n; ++p) {
        if (p == l) continue;
        const double b = net.rec_base[k](l, p);
        const double c = net.rec_coupling[k](l, p);
        rec.e(l, p) = o[p] * (b + c * o[l]);
        rec.de_dpre(l, p) = b + c * o[l];
        rec.de_dpost(l, p) = c * o[p];
      }
    }
  }
  return t;
}

std::vector<double> SurrogateOutputCounts(const SurrogateNet& net,
                                          const SurrogateSolution& solution) {
  const std::size_t last = net.topology.output_layer();
  std::vector<double> o = solution.activations[last];
  for (double& x : o) x /= net.params.Threshold(last);
  return o;
}

GradientSet FiniteDiffGradient(const SurrogateNet& net,
                               std::span<const double> input_rates,
                               std::span<const double> labels, double h) {
  const Topology& topo = net.topology;
  GradientSet g = GradientSet::ZerosLike(topo);
  constexpr long double kTolerance = 1e-17L;
  constexpr int kMaxIterations = 100000;
  auto derivative = [&](std::size_t k, bool recurrent, std::size_t r,
                        std::size_t c) {
    Perturbation shift{k, recurrent, r, c, static_cast<long double>(h)};
    const long double up = Solve<long double>(net, input_rates, labels,
                                              kTolerance, kMaxIterations, &shift)
                               .loss;
    shift.delta = -static_cast<long double>(h);
    const long double down =
        Solve<long double>(net, input_rates, labels, kTolerance,
                           kMaxIterations, &shift)
            .loss;
    return static_cast<double>((up - down) / (2.0L * h));
  };
  for (std::size_t k = 1; k < topo.num_layers(); ++k) {
    for (std::size_t r = 0; r < topo.size(k); ++r) {
      for (std::size_t c = 0; c < topo.size(k - 1); ++c) {
        g.feedforward[k](r, c) = derivative(k, false, r, c);
      }
      if (!topo.IsRecurrent(k)) continue;
      for (std::size_t c = 0; c < topo.size(k); ++c) {
        if (topo.recurrent_mask[k](r, c) != 0.0) {
          g.recurrent[k](r, c) = derivative(k, true, r, c);
        }
      }
    }
  }
  return g;
}

GradientSet UncoupledGradients(const SpsapTableau& tableau,
                               const Topology& topology,
                               const NeuronParams& params,
                               const std::vector<std::vector<double>>& deltas) {
  GradientSet g = GradientSet::ZerosLike(topology);
  for (std::size_t k = 1; k < topology.num_layers(); ++k) {
    const double inv_nu = 1.0 / params.Threshold(k);
    for (std::size_t l = 0; l < topology.size(k); ++l) {
      double ff_sum = 0.0;
      for (std::size_t j = 0; j < topology.size(k - 1); ++j) {
        ff_sum += topology.feedforward[k](l, j) *
                  tableau.feedforward[k].de_dpost(l, j);
      }
      const double ff_denominator = 1.0 - inv_nu * ff_sum;
      for (std::size_t j = 0; j < topology.size(k - 1); ++j) {
        g.feedforward[k](l, j) =
            deltas[k][l] * tableau.feedforward[k].e(l, j) / ff_denominator;
      }
      if (!topology.IsRecurrent(k)) continue;
      double rec_sum = 0.0;
      for (std::size_t p = 0; p < topology.size(k); ++p) {
        rec_sum +=
            topology.recurrent[k](l, p) * tableau.recurrent[k].de_dpost(l, p);
      }
      const double full_denominator = ff_denominator - inv_nu * rec_sum;
      for (std::size_t p = 0; p < topology.size(k); ++p) {
        if (topology.recurrent_mask[k](l, p) == 0.0) continue;
        g.recurrent[k](l, p) =
            deltas[k][l] * tableau.recurrent[k].e(l, p) / full_denominator;
      }
    }
  }
  return g;
}

GradCheckReport RunGradientCheck(const GradCheckOptions& options) {
  GradCheckReport report;
  for (int inst = 0; inst < options.instances; ++inst) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                      static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(inst)};
    std::mt19937_64 rng(seq);
    const std::size_t max_layers = std::max<std::size_t>(options.max_layers, 2);
    const std::size_t max_neurons =
        std::max<std::size_t>(options.max_neurons, 2);
    std::uniform_int_distribution<std::size_t> layer_count(2, max_layers);
    std::uniform_int_distribution<std::size_t> neurons(1, max_neurons);
    std::uniform_int_distribution<std::size_t> rec_neurons(2, max_neurons);
    std::bernoulli_distribution coin(0.5);

    std::vector<LayerSpec> layers(layer_count(rng));
    layers[0] = {LayerKind::kInput, neurons(rng), 0.0};
    std::uniform_int_distribution<std::size_t> which(1, layers.size() - 1);
    const std::size_t forced = which(rng);
    for (std::size_t k = 1; k < layers.size(); ++k) {
      if (k == forced || coin(rng)) {
        layers[k] = {LayerKind::kRecurrent, rec_neurons(rng),
                     coin(rng) ? 1.0 : 0.5};
      } else {
        layers[k] = {LayerKind::kFeedforward, neurons(rng), 0.0};
      }
    }
    const SurrogateNet net = MakeSurrogateNet(layers, rng());
    std::uniform_real_distribution<double> rate(0.5, 2.0);
    std::uniform_real_distribution<double> target(0.0, 1.0);
    std::vector<double> input(layers[0].size);
    for (double& x : input) x = rate(rng);
    std::vector<double> labels(layers.back().size);
    for (double& y : labels) y = target(rng);

    const std::string tag = "instance " + std::to_string(inst) + ": ";
    try {
      const SurrogateSolution solution = SurrogateForward(net, input, labels);
      const SpsapTableau tableau = SurrogateTableau(net, solution);
      const std::vector<double> counts = SurrogateOutputCounts(net, solution);
      const Topology& topo = net.topology;

      GradientSet production;
      if (options.inject_fault) {
        const auto delta =
            OutputDelta(counts, labels, net.params.Threshold(topo.output_layer()));
        production = UncoupledGradients(
            tableau, topo, net.params,
            BackpropagateDeltas(tableau, topo, net.params, delta,
                                options.solver));
      } else {
        BackwardOptions backward;
        backward.solver = options.solver;
        production = Backward(tableau, topo, net.params, counts, labels, backward);
      }

      // Sensitivity matrices: stacked elimination vs production solve.
      const std::vector<Matrix> naive_p =
          NaiveSensitivities(tableau, topo, net.params);
      for (std::size_t k = 1; k < topo.num_layers(); ++k) {
        const Matrix p =
            topo.IsRecurrent(k)
                ? SolvePExact(AssembleRecurrentSystem(tableau, topo, net.params, k))
                : FeedforwardP(tableau, topo, net.params, k);
        const double err = MaxAbsDifference(p, naive_p[k]);
        report.max_naive_p_error = std::max(report.max_naive_p_error, err);
        if (err > options.naive_tolerance * std::max(1.0, InfNorm(p))) {
          report.failures.push_back(tag + "P mismatch at layer " +
                                    std::to_string(k));
        }
      }

      const GradientSet naive =
          NaiveGradients(tableau, topo, net.params, counts, labels);
      const GradientSet fd =
          FiniteDiffGradient(net, input, labels, options.h);
      for (std::size_t k = 1; k < topo.num_layers(); ++k) {
        for (bool recurrent : {false, true}) {
          if (recurrent && !topo.IsRecurrent(k)) continue;
          const Matrix& gp =
              recurrent ? production.recurrent[k] : production.feedforward[k];
          const Matrix& gn = recurrent ? naive.recurrent[k] : naive.feedforward[k];
          const Matrix& gf = recurrent ? fd.recurrent[k] : fd.feedforward[k];
          for (std::size_t r = 0; r < gp.rows(); ++r) {
            for (std::size_t c = 0; c < gp.cols(); ++c) {
              if (recurrent && topo.recurrent_mask[k](r, c) == 0.0) continue;
              const double naive_err = std::abs(gp(r, c) - gn(r, c));
              report.max_naive_gradient_error =
                  std::max(report.max_naive_gradient_error, naive_err);
              if (naive_err >
                  options.naive_tolerance * std::max(1.0, std::abs(gn(r, c)))) {
                report.failures.push_back(tag + "naive gradient mismatch at " +
                                          EntryName(k, recurrent, r, c));
              }
              const double magnitude =
                  std::max(std::abs(gp(r, c)), std::abs(gf(r, c)));
              if (magnitude <= options.magnitude_floor) continue;
              ++report.entries_checked;
              const double rel = std::abs(gp(r, c) - gf(r, c)) / magnitude;
              report.max_fd_relative_error =
                  std::max(report.max_fd_relative_error, rel);
              if (rel > options.fd_tolerance) {
                std::ostringstream msg;
                msg << tag << "finite-difference relative error " << rel
                    << " at " << EntryName(k, recurrent, r, c);
                report.failures.push_back(msg.str());
              }
            }
          }
        }
      }
    } catch (const Error& e) {
      report.failures.push_back(tag + e.what());
    }
    ++report.instances;
  }
  return report;
}

}  // namespace strsbp::oracle
