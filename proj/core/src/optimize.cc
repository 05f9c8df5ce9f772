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

#include "strsbp/optimize.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "strsbp/error.h"

namespace strsbp {
namespace {

void AdamUpdate(const AdamOptions& o, double correction1, double correction2,
                const Matrix& g, Matrix& m, Matrix& v, Matrix& w,
                const Matrix* mask) {
  auto gv = g.values();
  auto mv = m.values();
  auto vv = v.values();
  auto wv = w.values();
  for (std::size_t i = 0; i < gv.size(); ++i) {
    if (mask && mask->values()[i] == 0.0) continue;
    mv[i] = o.beta1 * mv[i] + (1.0 - o.beta1) * gv[i];
    vv[i] = o.beta2 * vv[i] + (1.0 - o.beta2) * gv[i] * gv[i];
    const double m_hat = mv[i] / correction1;
    const double v_hat = vv[i] / correction2;
    wv[i] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
  }
}

double RegTerm(double w, double lambda) {
  if (w == 0.0) return 0.0;
  return lambda * std::copysign(std::exp(std::abs(w)), w);
}

}  // namespace

AdamState::AdamState(const Topology& topology, AdamOptions options)
    : options_(options),
      m_(GradientSet::ZerosLike(topology)),
      v_(GradientSet::ZerosLike(topology)) {}

bool AdamState::Step(const GradientSet& gradients, Topology& topology) {
  if (!AllFinite(gradients)) return false;
  ++steps_;
  const double correction1 =
      1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
  const double correction2 =
      1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 1; k < topology.num_layers(); ++k) {
    AdamUpdate(options_, correction1, correction2, gradients.feedforward[k],
               m_.feedforward[k], v_.feedforward[k], topology.feedforward[k],
               nullptr);
    if (topology.IsRecurrent(k)) {
      AdamUpdate(options_, correction1, correction2, gradients.recurrent[k],
                 m_.recurrent[k], v_.recurrent[k], topology.recurrent[k],
                 &topology.recurrent_mask[k]);
    }
  }
  return true;
}

std::vector<Violation> ValidateTrainConfig(const TrainConfig& c) {
  std::vector<Violation> out;
  if (!(c.target_count > c.nontarget_count && c.nontarget_count >= 0.0)) {
    out.push_back({"train", "target_count > nontarget_count >= 0"});
  }
  if (c.epochs < 1) out.push_back({"train", "epochs >= 1"});
  if (!(c.reg_lambda >= 0.0)) out.push_back({"train", "reg_lambda >= 0"});
  if (!(c.inhibition_weight >= 0.0)) {
    out.push_back({"train", "inhibition_weight >= 0"});
  }
  if (c.eval_every < 1) out.push_back({"train", "eval_every >= 1"});
  if (!(c.adam.learning_rate > 0.0)) {
    out.push_back({"train", "learning_rate > 0"});
  }
  if (!(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0 && c.adam.beta2 >= 0.0 &&
        c.adam.beta2 < 1.0)) {
    out.push_back({"train", "Adam betas in [0, 1)"});
  }
  if (!(c.adam.epsilon > 0.0)) out.push_back({"train", "Adam epsilon > 0"});
  return out;
}

double Loss(std::span<const double> counts, std::span<const double> labels) {
  double sum = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double d = counts[i] - labels[i];
    sum += d * d;
  }
  return 0.5 * sum;
}

std::vector<double> MakeLabels(std::size_t class_index, std::size_t num_classes,
                               const TrainConfig& config) {
  std::vector<double> y(num_classes, config.nontarget_count);
  y.at(class_index) = config.target_count;
  return y;
}

GradientSet RegularizationGradient(const Topology& topology, double lambda) {
  GradientSet g = GradientSet::ZerosLike(topology);
  if (lambda == 0.0) return g;
  for (std::size_t k = 1; k < topology.num_layers(); ++k) {
    auto w = topology.feedforward[k].values();
    auto out = g.feedforward[k].values();
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = RegTerm(w[i], lambda);
    if (!topology.IsRecurrent(k)) continue;
    auto wr = topology.recurrent[k].values();
    auto mask = topology.recurrent_mask[k].values();
    auto out_r = g.recurrent[k].values();
    for (std::size_t i = 0; i < wr.size(); ++i) {
      if (mask[i] != 0.0) out_r[i] = RegTerm(wr[i], lambda);
    }
  }
  return g;
}

void Accumulate(GradientSet& into, const GradientSet& other) {
  for (auto [dst, src] : {std::pair{&into.feedforward, &other.feedforward},
                          std::pair{&into.recurrent, &other.recurrent}}) {
    for (std::size_t k = 0; k < dst->size(); ++k) {
      auto d = (*dst)[k].values();
      auto s = (*src)[k].values();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
    }
  }
}

std::size_t PredictClass(std::span<const int> output_counts) {
  return static_cast<std::size_t>(
      std::max_element(output_counts.begin(), output_counts.end()) -
      output_counts.begin());
}

std::vector<std::size_t> EpochOrder(std::size_t num_samples,
                                    std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(num_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

EvalResult Evaluate(const Dataset& dataset, const Topology& topology,
                    const NeuronParams& params, const TrainConfig& config) {
  EvalResult result;
  const std::size_t classes = topology.size(topology.output_layer());
  result.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  const SimulationOptions sim = config.simulation();
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (const LabeledSpikeSample& sample : dataset.samples) {
    const Episode episode =
        RunForward(topology, params, sample.input, sample.duration, sim);
    const auto& counts = episode.counts[topology.output_layer()];
    const std::size_t predicted = PredictClass(counts);
    correct += predicted == sample.label;
    result.confusion.at(sample.label).at(predicted) += 1;
    std::vector<double> o(counts.begin(), counts.end());
    loss_sum += Loss(o, MakeLabels(sample.label, classes, config));
  }
  result.total = dataset.size();
  if (result.total > 0) {
    result.accuracy = static_cast<double>(correct) / result.total;
    result.mean_loss = loss_sum / result.total;
  }
  return result;
}

TrainResult Train(const Dataset& train, const Dataset* test,
                  Topology topology, const NeuronParams& params,
                  const TrainConfig& config, const TrainHooks& hooks) {
  if (train.empty()) throw DataError("training dataset is empty");
  if (auto problems = ValidateTrainConfig(config); !problems.empty()) {
    throw ValidationError(FormatViolations(problems));
  }
  if (auto problems = Validate(topology, params); !problems.empty()) {
    throw ValidationError(FormatViolations(problems));
  }
  const std::size_t classes = topology.size(topology.output_layer());
  if (train.num_classes > classes) {
    throw ValidationError("dataset has more classes than output neurons");
  }

  const auto partials = MakeCountPartials(config.partials);
  const SimulationOptions sim = config.simulation();
  BackwardOptions backward;
  backward.solver = config.solver;
  TableauOptions tableau_options;
  tableau_options.probe_silent = config.probe_silent;
  AdamState adam(topology, config.adam);
  TrainResult result;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochMetrics metrics;
    metrics.epoch = epoch;
    for (std::size_t index : EpochOrder(train.size(), config.seed, epoch)) {
      const LabeledSpikeSample& sample = train.samples[index];
      try {
        const Episode episode =
            RunForward(topology, params, sample.input, sample.duration, sim);
        const SpsapTableau tableau =
            ComputeTableau(episode, topology, params, *partials, tableau_options);
        const auto labels = MakeLabels(sample.label, classes, config);
        GradientSet g =
            Backward(episode, tableau, topology, params, labels, backward);
        Accumulate(g, RegularizationGradient(topology, config.reg_lambda));
        if (!adam.Step(g, topology)) {
          ++metrics.skipped;
          if (hooks.on_warning) {
            hooks.on_warning("epoch " + std::to_string(epoch) + ", sample " +
                             std::to_string(index) +
                             ": non-finite gradient, update skipped");
          }
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNumeric) {
          throw Error(e.code(), "sample " + std::to_string(index) + ": " +
                                    e.what());
        }
        ++metrics.skipped;
        if (hooks.on_warning) {
          hooks.on_warning("epoch " + std::to_string(epoch) + ", sample " +
                           std::to_string(index) + ": " + e.what() +
                           ", update skipped");
        }
      }
    }

    const EvalResult on_train = Evaluate(train, topology, params, config);
    metrics.train_loss = on_train.mean_loss;
    metrics.train_accuracy = on_train.accuracy;
    metrics.test_accuracy = std::numeric_limits<double>::quiet_NaN();
    if (test && !test->empty() &&
        (epoch % config.eval_every == 0 || epoch == config.epochs)) {
      metrics.test_accuracy = Evaluate(*test, topology, params, config).accuracy;
    }
    metrics.wall_seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start)
                               .count();
    result.history.push_back(metrics);
    if (hooks.on_epoch) hooks.on_epoch(metrics, topology);
    if (hooks.should_stop && hooks.should_stop(metrics)) break;
  }
  result.topology = std::move(topology);
  return result;
}

}  // namespace strsbp
