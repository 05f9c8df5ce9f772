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

#include "checkpoint.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "config.h"
#include "strsbp/error.h"

namespace strsbp::cli {
namespace {

constexpr std::string_view kMagic = "strsbp-checkpoint";

void AppendNumber(std::string& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  out += buf;
}

void AppendField(std::string& out, const char* name, double x) {
  out += name;
  out += ' ';
  AppendNumber(out, x);
  out += '\n';
}

void AppendMatrix(std::string& out, const char* tag, std::size_t layer,
                  const Matrix& m) {
  out += tag;
  out += ' ' + std::to_string(layer) + ' ' + std::to_string(m.rows()) + ' ' +
         std::to_string(m.cols()) + '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c > 0) out += ' ';
      AppendNumber(out, m(r, c));
    }
    out += '\n';
  }
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  // Next whitespace-delimited token; empty at end of input.
  std::string_view Token() {
    while (pos_ < text_.size() && IsSpace(text_[pos_])) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !IsSpace(text_[pos_])) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  void Expect(std::string_view word) {
    const std::string_view t = Token();
    if (t != word) {
      Fail("expected '" + std::string(word) + "', found '" + std::string(t) +
           "'");
    }
  }

  double Number() {
    const std::string_view t = Token();
    double x = 0.0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (t.empty() || ec != std::errc() || end != t.data() + t.size()) {
      Fail("bad number '" + std::string(t) + "'");
    }
    return x;
  }

  template <typename T>
  T Integer() {
    const std::string_view t = Token();
    T x{};
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (t.empty() || ec != std::errc() || end != t.data() + t.size()) {
      Fail("bad integer '" + std::string(t) + "'");
    }
    return x;
  }

  double Field(std::string_view name) {
    Expect(name);
    return Number();
  }

  [[noreturn]] void Fail(const std::string& what) const {
    throw DataError("checkpoint line " + std::to_string(line_) + ": " + what);
  }

 private:
  static bool IsSpace(char c) {
    return c == ' ' || c == '\n' || c == '\t' || c == '\r';
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

void ReadMatrix(Reader& in, std::string_view tag, std::size_t layer,
                Matrix& m) {
  in.Expect(tag);
  const auto k = in.Integer<std::size_t>();
  const auto rows = in.Integer<std::size_t>();
  const auto cols = in.Integer<std::size_t>();
  if (k != layer || rows != m.rows() || cols != m.cols()) {
    in.Fail(std::string(tag) + " block for layer " + std::to_string(layer) +
            " has the wrong shape");
  }
  for (double& x : m.values()) x = in.Number();
}

}  // namespace

std::string SerializeCheckpoint(const Checkpoint& cp) {
  const NeuronParams& p = cp.params;
  const Topology& t = cp.topology;
  std::string out;
  out += std::string(kMagic) + ' ' + std::to_string(kCheckpointVersion) + '\n';
  out += "seed " + std::to_string(cp.seed) + '\n';
  out += "epoch " + std::to_string(cp.epoch) + '\n';
  AppendField(out, "tau_m", p.tau_m);
  AppendField(out, "tau_s", p.tau_s);
  AppendField(out, "threshold", p.default_threshold);
  out += "thresholds " + std::to_string(p.thresholds.size());
  for (double v : p.thresholds) {
    out += ' ';
    AppendNumber(out, v);
  }
  out += '\n';
  AppendField(out, "refractory", p.refractory);
  AppendField(out, "reset_voltage", p.reset_voltage);
  AppendField(out, "synaptic_delay", p.synaptic_delay);
  AppendField(out, "sim_step", p.sim_step);
  out += "layers " + std::to_string(t.num_layers()) + '\n';
  for (const LayerSpec& l : t.layers) {
    out += std::string(LayerKindName(l.kind)) + ' ' + std::to_string(l.size) +
           ' ';
    AppendNumber(out, l.recurrent_density);
    out += '\n';
  }
  for (std::size_t k = 1; k < t.num_layers(); ++k) {
    AppendMatrix(out, "feedforward", k, t.feedforward[k]);
    if (t.IsRecurrent(k)) {
      AppendMatrix(out, "recurrent", k, t.recurrent[k]);
      AppendMatrix(out, "mask", k, t.recurrent_mask[k]);
    }
  }
  out += "end\n";
  return out;
}

Checkpoint ParseCheckpoint(std::string_view text) {
  Reader in(text);
  const std::string_view magic = in.Token();
  if (magic != kMagic) in.Fail("not a strsbp checkpoint");
  const int version = in.Integer<int>();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " +
                    std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint cp;
  in.Expect("seed");
  cp.seed = in.Integer<std::uint64_t>();
  in.Expect("epoch");
  cp.epoch = in.Integer<int>();
  NeuronParams& p = cp.params;
  p.tau_m = in.Field("tau_m");
  p.tau_s = in.Field("tau_s");
  p.default_threshold = in.Field("threshold");
  in.Expect("thresholds");
  const auto num_thresholds = in.Integer<std::size_t>();
  if (num_thresholds > 1000000) in.Fail("implausible threshold count");
  for (std::size_t i = 0; i < num_thresholds; ++i) {
    p.thresholds.push_back(in.Number());
  }
  p.refractory = in.Field("refractory");
  p.reset_voltage = in.Field("reset_voltage");
  p.synaptic_delay = in.Field("synaptic_delay");
  p.sim_step = in.Field("sim_step");

  in.Expect("layers");
  const auto num_layers = in.Integer<std::size_t>();
  if (num_layers < 2 || num_layers > 1000) in.Fail("bad layer count");
  std::vector<LayerSpec> layers(num_layers);
  for (LayerSpec& l : layers) {
    try {
      l.kind = ParseLayerKind(std::string(in.Token()));
    } catch (const Error& e) {
      in.Fail(e.what());
    }
    l.size = in.Integer<std::size_t>();
    if (l.size == 0 || l.size > 1000000) in.Fail("bad layer size");
    l.recurrent_density = in.Number();
  }
  cp.topology = Topology::Zeros(layers);
  Topology& t = cp.topology;
  for (std::size_t k = 1; k < num_layers; ++k) {
    ReadMatrix(in, "feedforward", k, t.feedforward[k]);
    if (t.IsRecurrent(k)) {
      ReadMatrix(in, "recurrent", k, t.recurrent[k]);
      ReadMatrix(in, "mask", k, t.recurrent_mask[k]);
    }
  }
  in.Expect("end");
  if (!in.Token().empty()) in.Fail("trailing content after 'end'");
  if (auto problems = Validate(t, p); !problems.empty()) {
    throw DataError("checkpoint topology is invalid: " +
                    FormatViolations(problems));
  }
  return cp;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& cp) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    const std::string text = SerializeCheckpoint(cp);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return ParseCheckpoint(text.str());
}

}  // namespace strsbp::cli
