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

#include "config.h"

#include <algorithm>
#include <concepts>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "strsbp/error.h"

namespace strsbp::cli {
namespace {

using Json = nlohmann::json;

// Reads typed members of one JSON object and rejects the rest.
class Group {
 public:
  Group(const Json& object, std::string path)
      : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) {
      throw ValidationError("config '" + path_ + "' must be an object");
    }
  }

  void Read(const char* key, double& out) {
    if (const Json* v = Find(key)) {
      if (!v->is_number()) WrongType(key, "a number");
      out = v->get<double>();
    }
  }
  void Read(const char* key, bool& out) {
    if (const Json* v = Find(key)) {
      if (!v->is_boolean()) WrongType(key, "true or false");
      out = v->get<bool>();
    }
  }
  void Read(const char* key, std::string& out) {
    if (const Json* v = Find(key)) {
      if (!v->is_string()) WrongType(key, "a string");
      out = v->get<std::string>();
    }
  }
  void Read(const char* key, int& out) {
    if (const Json* v = Find(key)) {
      if (!v->is_number_integer() ||
          v->get<std::int64_t>() > std::numeric_limits<int>::max() ||
          v->get<std::int64_t>() < std::numeric_limits<int>::min()) {
        WrongType(key, "an integer");
      }
      out = v->get<int>();
    }
  }
  template <std::unsigned_integral T>
  void Read(const char* key, T& out) {
    if (const Json* v = Find(key)) {
      if (!v->is_number_unsigned()) WrongType(key, "a non-negative integer");
      out = v->get<T>();
    }
  }
  void ReadPath(const char* key, const std::filesystem::path& base,
                std::filesystem::path& out) {
    std::string s;
    Read(key, s);
    if (!s.empty()) {
      const std::filesystem::path p(s);
      out = p.is_absolute() ? p : base / p;
    }
  }
  void Read(const char* key, std::vector<double>& out) {
    if (const Json* v = Find(key)) {
      if (!v->is_array()) WrongType(key, "an array of numbers");
      out.clear();
      for (const Json& x : *v) {
        if (!x.is_number()) WrongType(key, "an array of numbers");
        out.push_back(x.get<double>());
      }
    }
  }

  const Json* Find(const char* key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  std::string Qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void Finish() const {
    for (const auto& item : object_.items()) {
      if (!seen_.count(item.key())) {
        throw ValidationError("unknown config key '" + Qualified(item.key()) +
                              "'");
      }
    }
  }

 private:
  [[noreturn]] void WrongType(const char* key, const char* expected) const {
    throw ValidationError("config key '" + Qualified(key) + "' must be " +
                          expected);
  }

  const Json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

void ReadNeuron(const Json& j, NeuronParams& p) {
  Group g(j, "neuron");
  g.Read("tau_m", p.tau_m);
  g.Read("tau_s", p.tau_s);
  g.Read("threshold", p.default_threshold);
  g.Read("thresholds", p.thresholds);
  g.Read("refractory", p.refractory);
  g.Read("reset_voltage", p.reset_voltage);
  g.Read("synaptic_delay", p.synaptic_delay);
  g.Read("sim_step", p.sim_step);
  g.Finish();
}

void ReadNetwork(const Json& j, std::vector<LayerSpec>& layers) {
  Group g(j, "network");
  if (const Json* list = g.Find("layers")) {
    if (!list->is_array()) {
      throw ValidationError("config key 'network.layers' must be an array");
    }
    layers.clear();
    for (std::size_t i = 0; i < list->size(); ++i) {
      Group layer((*list)[i], "network.layers[" + std::to_string(i) + "]");
      std::string kind;
      LayerSpec spec;
      layer.Read("kind", kind);
      layer.Read("size", spec.size);
      layer.Read("density", spec.recurrent_density);
      layer.Finish();
      if (kind.empty()) {
        throw ValidationError("config key '" + layer.Qualified("kind") +
                              "' is required");
      }
      spec.kind = ParseLayerKind(kind);
      layers.push_back(spec);
    }
  }
  g.Finish();
}

void ReadTrain(const Json& j, TrainConfig& t) {
  Group g(j, "train");
  std::string solver = SolverName(t.solver);
  std::string partials = PartialsKindName(t.partials);
  g.Read("epochs", t.epochs);
  g.Read("target_count", t.target_count);
  g.Read("nontarget_count", t.nontarget_count);
  g.Read("learning_rate", t.adam.learning_rate);
  g.Read("beta1", t.adam.beta1);
  g.Read("beta2", t.adam.beta2);
  g.Read("epsilon", t.adam.epsilon);
  g.Read("reg_lambda", t.reg_lambda);
  g.Read("lateral_inhibition", t.lateral_inhibition);
  g.Read("inhibition_weight", t.inhibition_weight);
  g.Read("solver", solver);
  g.Read("partials", partials);
  g.Read("probe_silent", t.probe_silent);
  g.Read("eval_every", t.eval_every);
  g.Finish();
  t.solver = ParseSolver(solver);
  t.partials = ParsePartialsKind(partials);
}

void ReadData(const Json& j, const std::filesystem::path& base, DataConfig& d) {
  Group g(j, "data");
  std::string source = DataSourceName(d.source);
  g.Read("source", source);
  d.source = ParseDataSource(source);
  g.Read("duration", d.duration);
  g.Read("num_classes", d.num_classes);
  g.Read("samples_per_class", d.samples_per_class);
  g.Read("high_rate_hz", d.high_rate_hz);
  g.Read("low_rate_hz", d.low_rate_hz);
  g.ReadPath("train_images", base, d.train_images);
  g.ReadPath("train_labels", base, d.train_labels);
  g.ReadPath("test_images", base, d.test_images);
  g.ReadPath("test_labels", base, d.test_labels);
  g.Read("poisson_scale", d.poisson_scale);
  g.Read("max_train", d.max_train);
  g.Read("max_test", d.max_test);
  g.ReadPath("train_events", base, d.train_events);
  g.ReadPath("train_event_labels", base, d.train_event_labels);
  g.ReadPath("test_events", base, d.test_events);
  g.ReadPath("test_event_labels", base, d.test_event_labels);
  g.Finish();
}

void RequirePair(const std::filesystem::path& a, const char* a_key,
                 const std::filesystem::path& b, const char* b_key,
                 bool required, std::vector<Violation>& out) {
  if (a.empty() != b.empty()) {
    out.push_back({"data", std::string(a_key) + " and " + b_key +
                               " must be given together"});
    return;
  }
  if (a.empty()) {
    if (required) {
      out.push_back({"data", std::string(a_key) + " and " + b_key +
                                 " are required"});
    }
    return;
  }
  for (const auto* p : {&a, &b}) {
    if (!std::filesystem::exists(*p)) {
      out.push_back({"data", "missing file " + p->string()});
    }
  }
}

void Truncate(std::vector<LabeledImage>& images, std::size_t limit) {
  if (limit > 0 && images.size() > limit) images.resize(limit);
}

Dataset EncodeSplit(std::vector<LabeledImage> images, std::size_t limit,
                    const RunConfig& config, std::uint64_t seed) {
  Truncate(images, limit);
  const std::size_t inputs = config.layers.front().size;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].pixels.size() != inputs) {
      throw DataError("image " + std::to_string(i) + " has " +
                      std::to_string(images[i].pixels.size()) +
                      " pixels, input layer has " + std::to_string(inputs));
    }
  }
  EncodeOptions options;
  options.duration = config.data.duration;
  options.scale = config.data.poisson_scale;
  options.seed = seed;
  options.step = config.neuron.sim_step;
  Dataset d = EncodeImages(images, options);
  d.num_inputs = inputs;
  return d;
}

Dataset FromEvents(const std::filesystem::path& events,
                   const std::filesystem::path& labels,
                   const RunConfig& config,
                   std::vector<std::string>& warnings) {
  Dataset d;
  d.num_inputs = config.layers.front().size;
  d.samples = LoadEventCsv(events, labels, d.num_inputs, config.data.duration,
                           &warnings);
  for (const auto& s : d.samples) {
    d.num_classes = std::max(d.num_classes, s.label + 1);
  }
  return d;
}

}  // namespace

DataSource ParseDataSource(const std::string& name) {
  if (name == "synthetic") return DataSource::kSynthetic;
  if (name == "idx") return DataSource::kIdx;
  if (name == "event_csv") return DataSource::kEventCsv;
  throw ValidationError("unknown data source '" + name +
                        "' (expected synthetic, idx or event_csv)");
}

const char* DataSourceName(DataSource source) {
  switch (source) {
    case DataSource::kIdx:
      return "idx";
    case DataSource::kEventCsv:
      return "event_csv";
    case DataSource::kSynthetic:
      break;
  }
  return "synthetic";
}

LayerKind ParseLayerKind(const std::string& name) {
  if (name == "input") return LayerKind::kInput;
  if (name == "feedforward") return LayerKind::kFeedforward;
  if (name == "recurrent") return LayerKind::kRecurrent;
  throw ValidationError("unknown layer kind '" + name + "'");
}

RunConfig ParseConfig(const std::string& text,
                      const std::filesystem::path& base_dir) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig config;
  Group g(root, "");
  g.Read("seed", config.seed);
  g.ReadPath("out_dir", base_dir, config.out_dir);
  if (const Json* j = g.Find("neuron")) ReadNeuron(*j, config.neuron);
  if (const Json* j = g.Find("network")) ReadNetwork(*j, config.layers);
  if (const Json* j = g.Find("train")) ReadTrain(*j, config.train);
  if (const Json* j = g.Find("data")) ReadData(*j, base_dir, config.data);
  g.Finish();
  config.train.seed = config.seed;
  return config;
}

RunConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str(), path.parent_path());
}

std::vector<Violation> ValidateRunConfig(const RunConfig& config) {
  std::vector<Violation> out;
  if (config.layers.size() < 2) {
    out.push_back({"network.layers", "at least an input and an output layer"});
    return out;
  }
  for (const Violation& v : ValidateParams(config.neuron, config.layers.size())) {
    out.push_back(v);
  }
  for (const Violation& v : ValidateTrainConfig(config.train)) out.push_back(v);
  if (out.empty()) {
    try {
      const Topology t = InitWeights(Topology::Zeros(config.layers), config.seed);
      for (const Violation& v : Validate(t, config.neuron)) out.push_back(v);
    } catch (const Error& e) {
      out.push_back({"network.layers", e.what()});
    }
  }

  const DataConfig& d = config.data;
  const std::size_t outputs = config.layers.back().size;
  if (!(d.duration > 0.0)) {
    out.push_back({"data.duration", "> 0"});
  } else if (config.neuron.sim_step > 0.0) {
    const double steps = d.duration / config.neuron.sim_step;
    if (std::abs(steps - std::round(steps)) > 1e-9 * steps) {
      out.push_back({"data.duration", "a multiple of sim_step"});
    }
  }
  if (d.num_classes > outputs) {
    out.push_back({"data.num_classes", "<= output layer size"});
  }
  switch (d.source) {
    case DataSource::kSynthetic:
      if (d.num_classes == 1 || outputs < 2) {
        out.push_back({"data", "synthetic task needs >= 2 classes"});
      }
      if (d.samples_per_class < 1) {
        out.push_back({"data.samples_per_class", ">= 1"});
      }
      if (!(d.low_rate_hz >= 0.0 && d.high_rate_hz > d.low_rate_hz)) {
        out.push_back({"data", "high_rate_hz > low_rate_hz >= 0"});
      }
      break;
    case DataSource::kIdx:
      if (!(d.poisson_scale >= 0.0 && d.poisson_scale <= 1.0)) {
        out.push_back({"data.poisson_scale", "in [0, 1]"});
      }
      RequirePair(d.train_images, "train_images", d.train_labels,
                  "train_labels", true, out);
      RequirePair(d.test_images, "test_images", d.test_labels, "test_labels",
                  false, out);
      break;
    case DataSource::kEventCsv:
      RequirePair(d.train_events, "train_events", d.train_event_labels,
                  "train_event_labels", true, out);
      RequirePair(d.test_events, "test_events", d.test_event_labels,
                  "test_event_labels", false, out);
      break;
  }
  return out;
}

LoadedData LoadData(const RunConfig& config) {
  if (auto problems = ValidateRunConfig(config); !problems.empty()) {
    throw ValidationError(FormatViolations(problems));
  }
  const DataConfig& d = config.data;
  LoadedData data;
  switch (d.source) {
    case DataSource::kSynthetic: {
      SyntheticTaskOptions options;
      options.samples_per_class = d.samples_per_class;
      options.high_rate_hz = d.high_rate_hz;
      options.low_rate_hz = d.low_rate_hz;
      options.step = config.neuron.sim_step;
      const std::size_t classes =
          d.num_classes > 0 ? d.num_classes : config.layers.back().size;
      SyntheticTask task =
          MakeSyntheticRateTask(classes, config.layers.front().size,
                                d.duration, config.seed, options);
      data.train = std::move(task.train);
      data.test = std::move(task.test);
      break;
    }
    case DataSource::kIdx:
      data.train = EncodeSplit(LoadIdx(d.train_images, d.train_labels),
                               d.max_train, config, config.seed);
      if (!d.test_images.empty()) {
        data.test = EncodeSplit(LoadIdx(d.test_images, d.test_labels),
                                d.max_test, config, config.seed + 1);
      }
      break;
    case DataSource::kEventCsv:
      data.train = FromEvents(d.train_events, d.train_event_labels, config,
                              data.warnings);
      if (!d.test_events.empty()) {
        data.test = FromEvents(d.test_events, d.test_event_labels, config,
                               data.warnings);
      }
      break;
  }
  const std::size_t outputs = config.layers.back().size;
  for (Dataset* set : {&data.train, &data.test}) {
    if (d.num_classes > 0) {
      if (set->num_classes > d.num_classes) {
        throw DataError("dataset has labels >= num_classes " +
                        std::to_string(d.num_classes));
      }
      set->num_classes = d.num_classes;
    }
    if (set->num_classes > outputs) {
      throw DataError("dataset has " + std::to_string(set->num_classes) +
                      " classes but the output layer has " +
                      std::to_string(outputs) + " neurons");
    }
    set->num_inputs = config.layers.front().size;
    if (!set->empty()) CheckDataset(*set, config.neuron);
  }
  if (data.train.empty()) throw DataError("training set is empty");
  return data;
}

}  // namespace strsbp::cli
