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

#include "strsbp/network.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <utility>

#include "strsbp/error.h"

namespace strsbp {
namespace {

bool IsGridMultiple(double value, double step) {
  const double ratio = value / step;
  return std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio);
}

std::string LayerName(std::size_t k) { return "layer " + std::to_string(k); }

void CheckMatrix(const Matrix& m, std::size_t rows, std::size_t cols,
                 const std::string& name, std::vector<Violation>& out) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream rule;
    rule << "shape " << m.rows() << "x" << m.cols() << " does not match "
         << rows << "x" << cols;
    out.push_back({name, rule.str()});
    return;
  }
  if (!AllFinite(m)) out.push_back({name, "non-finite weight"});
}

std::vector<Violation> ValidateStructure(const Topology& t) {
  std::vector<Violation> out;
  if (t.layers.size() < 2) {
    out.push_back({"topology", "at least an input and one trained layer"});
    return out;
  }
  for (std::size_t k = 0; k < t.layers.size(); ++k) {
    const LayerSpec& spec = t.layers[k];
    if (spec.size < 1) out.push_back({LayerName(k), "size >= 1"});
    if ((spec.kind == LayerKind::kInput) != (k == 0)) {
      out.push_back({LayerName(k), "input kind only as layer 0"});
    }
    if (spec.kind == LayerKind::kRecurrent) {
      if (!(spec.recurrent_density >= 0.0 && spec.recurrent_density <= 1.0)) {
        out.push_back({LayerName(k), "recurrent_density in [0, 1]"});
      }
    } else if (spec.recurrent_density != 0.0) {
      out.push_back({LayerName(k), "recurrent_density = 0 for non-recurrent"});
    }
  }
  const std::size_t n = t.layers.size();
  if (t.feedforward.size() != n || t.recurrent.size() != n ||
      t.recurrent_mask.size() != n) {
    out.push_back({"topology", "one weight slot per layer"});
  }
  return out;
}

}  // namespace

std::int64_t NeuronParams::Steps(double ms) const {
  return static_cast<std::int64_t>(std::llround(ms / sim_step));
}

const char* LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kInput:
      return "input";
    case LayerKind::kFeedforward:
      return "feedforward";
    case LayerKind::kRecurrent:
      return "recurrent";
  }
  return "unknown";
}

Topology Topology::Zeros(std::vector<LayerSpec> layers) {
  Topology t;
  t.layers = std::move(layers);
  const std::size_t n = t.layers.size();
  t.feedforward.resize(n);
  t.recurrent.resize(n);
  t.recurrent_mask.resize(n);
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t rows = t.layers[k].size;
    t.feedforward[k] = Matrix(rows, t.layers[k - 1].size);
    if (t.IsRecurrent(k)) {
      t.recurrent[k] = Matrix(rows, rows);
      t.recurrent_mask[k] = Matrix(rows, rows, 1.0);
      for (std::size_t i = 0; i < rows; ++i) t.recurrent_mask[k](i, i) = 0.0;
    }
  }
  return t;
}

std::string FormatViolations(std::span<const Violation> violations) {
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    out << violations[i].where << ": " << violations[i].rule;
  }
  return out.str();
}

std::vector<Violation> ValidateParams(const NeuronParams& p,
                                      std::size_t num_layers) {
  std::vector<Violation> out;
  if (!(p.tau_s > 0.0)) out.push_back({"params", "tau_s > 0"});
  if (!(p.tau_m > p.tau_s)) out.push_back({"params", "tau_m > tau_s"});
  if (!(p.sim_step > 0.0)) {
    out.push_back({"params", "sim_step > 0"});
    return out;
  }
  if (!(p.refractory >= 0.0)) out.push_back({"params", "refractory >= 0"});
  if (!(p.synaptic_delay >= p.sim_step) ||
      !IsGridMultiple(p.synaptic_delay, p.sim_step)) {
    out.push_back(
        {"params", "synaptic_delay is a positive multiple of sim_step"});
  }
  if (!IsGridMultiple(p.refractory, p.sim_step)) {
    out.push_back({"params", "refractory is a multiple of sim_step"});
  }
  if (p.reset_voltage != 0.0) {
    out.push_back({"params", "reset_voltage must be 0 mV"});
  }
  if (!p.thresholds.empty() && p.thresholds.size() != num_layers) {
    out.push_back({"params", "one threshold per layer"});
  }
  for (std::size_t k = 0; k < num_layers; ++k) {
    if (!(p.Threshold(k) > 0.0)) {
      out.push_back({LayerName(k), "threshold > 0"});
    }
  }
  return out;
}

std::vector<Violation> Validate(const Topology& t, const NeuronParams& params) {
  std::vector<Violation> out = ValidateStructure(t);
  if (!out.empty()) {
    auto more = ValidateParams(params, t.layers.size());
    out.insert(out.end(), more.begin(), more.end());
    return out;
  }
  for (std::size_t k = 1; k < t.layers.size(); ++k) {
    const std::size_t rows = t.size(k);
    CheckMatrix(t.feedforward[k], rows, t.size(k - 1),
                "feedforward weights of " + LayerName(k), out);
    if (!t.IsRecurrent(k)) {
      if (!t.recurrent[k].empty() || !t.recurrent_mask[k].empty()) {
        out.push_back({LayerName(k), "recurrent weights on non-recurrent layer"});
      }
      continue;
    }
    const std::string rec_name = "recurrent weights of " + LayerName(k);
    CheckMatrix(t.recurrent[k], rows, rows, rec_name, out);
    CheckMatrix(t.recurrent_mask[k], rows, rows,
                "recurrent mask of " + LayerName(k), out);
    if (!t.recurrent[k].SameShape(t.recurrent_mask[k]) ||
        t.recurrent[k].rows() != rows) {
      continue;
    }
    bool self_connection = false;
    bool outside_mask = false;
    bool bad_mask = false;
    for (std::size_t i = 0; i < rows; ++i) {
      if (t.recurrent[k](i, i) != 0.0 || t.recurrent_mask[k](i, i) != 0.0) {
        self_connection = true;
      }
      for (std::size_t j = 0; j < rows; ++j) {
        const double m = t.recurrent_mask[k](i, j);
        if (m != 0.0 && m != 1.0) bad_mask = true;
        if (i != j && m == 0.0 && t.recurrent[k](i, j) != 0.0) {
          outside_mask = true;
        }
      }
    }
    if (self_connection) out.push_back({rec_name, "self-connection"});
    if (outside_mask) out.push_back({rec_name, "nonzero weight outside mask"});
    if (bad_mask) out.push_back({rec_name, "mask entries are 0 or 1"});
  }
  auto more = ValidateParams(params, t.layers.size());
  out.insert(out.end(), more.begin(), more.end());
  return out;
}

std::vector<Violation> ValidateSpikeTrain(const SpikeTrain& train,
                                          const NeuronParams& params,
                                          double duration,
                                          bool check_refractory) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < train.times.size(); ++i) {
    const double t = train.times[i];
    const std::string where = "spike " + std::to_string(i);
    if (!(t >= 0.0 && t < duration)) {
      out.push_back({where, "time in [0, duration)"});
    }
    if (!IsGridMultiple(t, params.sim_step)) {
      out.push_back({where, "time on the sim_step grid"});
    }
    if (i > 0) {
      const double gap = t - train.times[i - 1];
      if (!(gap > 0.0)) out.push_back({where, "strictly increasing"});
      if (check_refractory && gap < params.refractory - 1e-9) {
        out.push_back({where, "gap >= refractory"});
      }
    }
  }
  return out;
}

Topology InitWeights(const Topology& topology, std::uint64_t seed) {
  if (auto problems = ValidateStructure(topology); !problems.empty()) {
    throw ValidationError(FormatViolations(problems));
  }
  Topology t = Topology::Zeros(topology.layers);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  for (std::size_t k = 1; k < t.num_layers(); ++k) {
    for (double& w : t.feedforward[k].values()) w = uniform(rng);
    if (!t.IsRecurrent(k)) continue;

    const std::size_t n = t.size(k);
    std::vector<std::size_t> candidates;
    candidates.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) candidates.push_back(i * n + j);
      }
    }
    const auto wanted = static_cast<std::size_t>(std::floor(
        t.layers[k].recurrent_density * static_cast<double>(candidates.size()) +
        1e-9));
    // Partial Fisher-Yates: the first `wanted` slots become the mask.
    for (std::size_t i = 0; i < wanted; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
      std::swap(candidates[i], candidates[pick(rng)]);
    }
    std::sort(candidates.begin(), candidates.begin() + wanted);
    Matrix& mask = t.recurrent_mask[k];
    Matrix& weights = t.recurrent[k];
    std::fill(mask.values().begin(), mask.values().end(), 0.0);
    for (std::size_t i = 0; i < wanted; ++i) {
      const std::size_t idx = candidates[i];
      mask(idx / n, idx % n) = 1.0;
      weights(idx / n, idx % n) = uniform(rng);
    }
  }
  return t;
}

}  // namespace strsbp
