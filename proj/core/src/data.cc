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

#include "strsbp/data.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string_view>

#include "strsbp/error.h"

namespace strsbp {
namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::mt19937_64 SeededRng(std::uint64_t seed, std::uint64_t a,
                          std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a),
                    static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

std::vector<std::uint8_t> ReadAll(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class BigEndianReader {
 public:
  BigEndianReader(const std::vector<std::uint8_t>& bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}

  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_++];
    return v;
  }
  std::span<const std::uint8_t> Bytes(std::size_t n) {
    Need(n);
    std::span<const std::uint8_t> out(bytes_.data() + pos_, n);
    pos_ += n;
    return out;
  }

 private:
  void Need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw DataError(name_ + ": truncated IDX file");
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

void PutU32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v >> 24),
                                 static_cast<char>(v >> 16),
                                 static_cast<char>(v >> 8),
                                 static_cast<char>(v)};
  out.write(b.data(), b.size());
}

std::vector<SpikeTrain> DrawPoisson(std::span<const double> probabilities,
                                    std::int64_t num_steps, double step,
                                    std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<SpikeTrain> trains(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    if (p <= 0.0) continue;
    for (std::int64_t s = 0; s < num_steps; ++s) {
      if (uniform(rng) < p) {
        trains[i].times.push_back(static_cast<double>(s) * step);
      }
    }
  }
  return trains;
}

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T ParseField(std::string_view field, const std::string& where) {
  T value{};
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError(where + ": cannot parse '" + std::string(field) + "'");
  }
  return value;
}

std::string FormatTime(double t) {
  std::array<char, 32> buf;
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), t);
  return std::string(buf.data(), ptr);
}

}  // namespace

void CheckDataset(const Dataset& dataset, const NeuronParams& params) {
  for (std::size_t s = 0; s < dataset.samples.size(); ++s) {
    const LabeledSpikeSample& sample = dataset.samples[s];
    const std::string where = "sample " + std::to_string(s);
    if (sample.input.size() != dataset.num_inputs) {
      throw DataError(where + ": expected " +
                      std::to_string(dataset.num_inputs) + " input trains");
    }
    if (sample.label >= dataset.num_classes) {
      throw DataError(where + ": label " + std::to_string(sample.label) +
                      " outside " + std::to_string(dataset.num_classes) +
                      " classes");
    }
    for (std::size_t i = 0; i < sample.input.size(); ++i) {
      auto problems = ValidateSpikeTrain(sample.input[i], params,
                                         sample.duration, false);
      if (!problems.empty()) {
        throw DataError(where + ", input " + std::to_string(i) + ": " +
                        FormatViolations(problems));
      }
    }
  }
}

std::vector<SpikeTrain> PoissonEncode(std::span<const std::uint8_t> pixels,
                                      double duration, double scale,
                                      std::uint64_t seed, double step) {
  std::vector<double> p(pixels.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = scale * pixels[i] / 255.0;
  std::mt19937_64 rng(seed);
  return DrawPoisson(p, std::llround(duration / step), step, rng);
}

std::vector<LabeledImage> LoadIdx(const std::filesystem::path& images,
                                  const std::filesystem::path& labels) {
  const auto image_bytes = ReadAll(images);
  const auto label_bytes = ReadAll(labels);
  BigEndianReader img(image_bytes, images.string());
  BigEndianReader lab(label_bytes, labels.string());
  if (img.U32() != kIdxImageMagic) {
    throw DataError(images.string() + ": bad IDX image magic");
  }
  if (lab.U32() != kIdxLabelMagic) {
    throw DataError(labels.string() + ": bad IDX label magic");
  }
  const std::uint32_t count = img.U32();
  const std::uint32_t rows = img.U32();
  const std::uint32_t cols = img.U32();
  const std::uint32_t label_count = lab.U32();
  if (count != label_count) {
    throw DataError("IDX count mismatch: " + std::to_string(count) +
                    " images vs " + std::to_string(label_count) + " labels");
  }
  std::vector<LabeledImage> out(count);
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto px = img.Bytes(pixels);
    out[i].pixels.assign(px.begin(), px.end());
    out[i].label = lab.Bytes(1)[0];
  }
  return out;
}

void SaveIdx(const std::filesystem::path& images,
             const std::filesystem::path& labels,
             std::span<const LabeledImage> data, std::size_t rows,
             std::size_t cols) {
  std::ofstream img(images, std::ios::binary);
  std::ofstream lab(labels, std::ios::binary);
  if (!img || !lab) throw DataError("cannot write IDX files");
  PutU32(img, kIdxImageMagic);
  PutU32(img, static_cast<std::uint32_t>(data.size()));
  PutU32(img, static_cast<std::uint32_t>(rows));
  PutU32(img, static_cast<std::uint32_t>(cols));
  PutU32(lab, kIdxLabelMagic);
  PutU32(lab, static_cast<std::uint32_t>(data.size()));
  for (const LabeledImage& im : data) {
    if (im.pixels.size() != rows * cols) {
      throw DataError("image size does not match IDX dimensions");
    }
    img.write(reinterpret_cast<const char*>(im.pixels.data()),
              static_cast<std::streamsize>(im.pixels.size()));
    const char label = static_cast<char>(im.label);
    lab.write(&label, 1);
  }
}

Dataset EncodeImages(std::span<const LabeledImage> images,
                     const EncodeOptions& options) {
  Dataset d;
  d.num_inputs = images.empty() ? 0 : images.front().pixels.size();
  for (std::size_t i = 0; i < images.size(); ++i) {
    const LabeledImage& im = images[i];
    std::vector<double> p(im.pixels.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
      p[j] = options.scale * im.pixels[j] / 255.0;
    }
    auto rng = SeededRng(options.seed, i);
    LabeledSpikeSample sample;
    sample.input = DrawPoisson(
        p, std::llround(options.duration / options.step), options.step, rng);
    sample.label = im.label;
    sample.duration = options.duration;
    d.num_classes = std::max(d.num_classes, im.label + 1);
    d.samples.push_back(std::move(sample));
  }
  return d;
}

std::vector<LabeledSpikeSample> LoadEventCsv(
    const std::filesystem::path& events, const std::filesystem::path& labels,
    std::size_t num_neurons, double duration,
    std::vector<std::string>* warnings) {
  std::map<std::uint64_t, LabeledSpikeSample> samples;
  {
    std::ifstream in(labels);
    if (!in) throw DataError("cannot open " + labels.string());
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
      if (line.empty()) continue;
      const std::string where = labels.string() + ":" + std::to_string(line_no);
      const auto fields = SplitFields(line);
      if (fields.size() != 2) throw DataError(where + ": expected sample_id,label");
      const auto id = ParseField<std::uint64_t>(fields[0], where);
      LabeledSpikeSample sample;
      sample.label = ParseField<std::size_t>(fields[1], where);
      sample.duration = duration;
      sample.input.resize(num_neurons);
      if (!samples.emplace(id, std::move(sample)).second) {
        throw DataError(where + ": duplicate label for sample " +
                        std::to_string(id));
      }
    }
  }
  std::ifstream in(events);
  if (!in) throw DataError("cannot open " + events.string());
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    const std::string where = events.string() + ":" + std::to_string(line_no);
    const auto fields = SplitFields(line);
    if (fields.size() != 3) {
      throw DataError(where + ": expected sample_id,neuron_id,time_ms");
    }
    const auto id = ParseField<std::uint64_t>(fields[0], where);
    const auto neuron = ParseField<std::size_t>(fields[1], where);
    const auto time = ParseField<double>(fields[2], where);
    if (neuron >= num_neurons) {
      throw DataError(where + ": neuron_id " + std::to_string(neuron) +
                      " >= " + std::to_string(num_neurons));
    }
    if (!(time >= 0.0 && time < duration)) {
      throw DataError(where + ": time " + std::string(fields[2]) +
                      " outside [0, " + FormatTime(duration) + ")");
    }
    auto it = samples.find(id);
    if (it == samples.end()) {
      throw DataError(where + ": sample " + std::to_string(id) +
                      " has no label");
    }
    it->second.input[neuron].times.push_back(time);
  }
  std::vector<LabeledSpikeSample> out;
  out.reserve(samples.size());
  for (auto& [id, sample] : samples) {
    for (std::size_t n = 0; n < sample.input.size(); ++n) {
      auto& times = sample.input[n].times;
      std::sort(times.begin(), times.end());
      const auto last = std::unique(times.begin(), times.end());
      if (last != times.end()) {
        if (warnings) {
          warnings->push_back("sample " + std::to_string(id) + ", neuron " +
                              std::to_string(n) + ": dropped " +
                              std::to_string(times.end() - last) +
                              " duplicate event(s)");
        }
        times.erase(last, times.end());
      }
    }
    out.push_back(std::move(sample));
  }
  return out;
}

void WriteEventCsv(const std::filesystem::path& events,
                   const std::filesystem::path& labels,
                   std::span<const LabeledSpikeSample> samples) {
  std::ofstream ev(events, std::ios::binary);
  std::ofstream lab(labels, std::ios::binary);
  if (!ev || !lab) throw DataError("cannot write event CSV files");
  for (std::size_t s = 0; s < samples.size(); ++s) {
    lab << s << ',' << samples[s].label << '\n';
    for (std::size_t n = 0; n < samples[s].input.size(); ++n) {
      for (double t : samples[s].input[n].times) {
        ev << s << ',' << n << ',' << FormatTime(t) << '\n';
      }
    }
  }
}

SyntheticTask MakeSyntheticRateTask(std::size_t num_classes,
                                    std::size_t num_inputs, double duration,
                                    std::uint64_t seed,
                                    const SyntheticTaskOptions& options) {
  if (num_classes < 2) throw ValidationError("synthetic task needs >= 2 classes");
  if (num_inputs < 1) throw ValidationError("synthetic task needs inputs");
  SyntheticTask task;
  std::mt19937_64 rng = SeededRng(seed, 0xC1A55);
  const std::size_t min_diff = static_cast<std::size_t>(
      std::ceil(options.min_template_distance * num_inputs));
  std::vector<std::size_t> order(num_inputs);
  for (int attempt = 0;; ++attempt) {
    if (attempt == 10000) {
      throw ValidationError("cannot draw sufficiently distinct templates");
    }
    task.templates.assign(num_classes, std::vector<bool>(num_inputs, false));
    for (auto& tmpl : task.templates) {
      for (std::size_t i = 0; i < num_inputs; ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i = 0; i < num_inputs / 2; ++i) tmpl[order[i]] = true;
    }
    bool distinct = true;
    for (std::size_t a = 0; a < num_classes && distinct; ++a) {
      for (std::size_t b = a + 1; b < num_classes && distinct; ++b) {
        std::size_t diff = 0;
        for (std::size_t i = 0; i < num_inputs; ++i) {
          diff += task.templates[a][i] != task.templates[b][i];
        }
        distinct = diff >= min_diff;
      }
    }
    if (distinct) break;
  }

  for (Dataset* d : {&task.train, &task.test}) {
    d->num_classes = num_classes;
    d->num_inputs = num_inputs;
  }
  const std::int64_t num_steps = std::llround(duration / options.step);
  const std::size_t train_per_class =
      static_cast<std::size_t>(std::floor(0.8 * options.samples_per_class));
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<double> p(num_inputs);
    for (std::size_t i = 0; i < num_inputs; ++i) {
      const double hz =
          task.templates[c][i] ? options.high_rate_hz : options.low_rate_hz;
      p[i] = hz * options.step / 1000.0;
    }
    for (std::size_t s = 0; s < options.samples_per_class; ++s) {
      auto sample_rng = SeededRng(seed, c + 1, s);
      LabeledSpikeSample sample;
      sample.input = DrawPoisson(p, num_steps, options.step, sample_rng);
      sample.label = c;
      sample.duration = duration;
      (s < train_per_class ? task.train : task.test)
          .samples.push_back(std::move(sample));
    }
  }
  return task;
}

}  // namespace strsbp
