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

#include "commands.h"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>

#include "CLI11.hpp"
#include "checkpoint.h"
#include "config.h"
#include "metrics.h"
#include "strsbp/data.h"
#include "strsbp/error.h"
#include "strsbp/optimize.h"
#include "strsbp/oracle.h"

namespace strsbp::cli {
namespace {

namespace fs = std::filesystem;

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::string out;
  std::string solver;
  bool dry_run = false;
};

struct EvalArgs {
  std::string checkpoint;
  std::string config;
  std::string images, labels;
  std::string events, event_labels;
  std::optional<double> duration;
  double scale = 0.25;
  std::uint64_t seed = 0;
  bool dry_run = false;
};

struct GradcheckArgs {
  std::uint64_t seed = 0;
  int instances = 25;
  std::size_t max_neurons = 5;
  std::size_t max_layers = 3;
  double h = 1e-5;
  std::string solver = "exact";
  bool inject_fault = false;
  bool dry_run = false;
};

struct EncodeArgs {
  std::string images, labels, out;
  double duration = 400.0;
  double scale = 0.25;
  double step = 1.0;
  std::uint64_t seed = 0;
  bool dry_run = false;
};

struct ValidateArgs {
  std::string config;
  std::string checkpoint;
  bool dry_run = false;
};

std::string Fixed(double x, int digits = 6) {
  if (std::isnan(x)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string Sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

RunConfig ConfigWithOverrides(const TrainArgs& args) {
  RunConfig config = LoadConfig(args.config);
  if (args.seed) {
    config.seed = *args.seed;
    config.train.seed = *args.seed;
  }
  if (args.epochs) config.train.epochs = *args.epochs;
  if (!args.out.empty()) config.out_dir = args.out;
  if (!args.solver.empty()) config.train.solver = ParseSolver(args.solver);
  return config;
}

int Train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  const RunConfig config = ConfigWithOverrides(args);
  LoadedData data = LoadData(config);
  for (const std::string& w : data.warnings) err << "warning: " << w << '\n';
  Topology topology =
      InitWeights(Topology::Zeros(config.layers), config.seed);
  if (args.dry_run) {
    out << "dry run: config valid, " << data.train.size() << " train / "
        << data.test.size() << " test samples\n";
    return kExitOk;
  }

  fs::create_directories(config.out_dir);
  MetricsLog log(config.out_dir);
  const fs::path checkpoint_path = config.out_dir / "checkpoint.txt";
  Checkpoint checkpoint{config.seed, 0, config.neuron, {}};

  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochMetrics& m, const Topology& t) {
    log.Append(m);
    checkpoint.epoch = m.epoch;
    checkpoint.topology = t;
    SaveCheckpoint(checkpoint_path, checkpoint);
    out << "epoch " << m.epoch << " train_loss=" << Fixed(m.train_loss, 4)
        << " train_acc=" << Fixed(m.train_accuracy, 4)
        << " test_acc=" << Fixed(m.test_accuracy, 4)
        << " skipped=" << m.skipped << " seconds=" << Fixed(m.wall_seconds, 1)
        << std::endl;
  };
  hooks.on_warning = [&](const std::string& w) {
    err << "warning: " << w << '\n';
  };
  TrainResult result =
      strsbp::Train(data.train, data.test.empty() ? nullptr : &data.test,
                    std::move(topology), config.neuron, config.train, hooks);
  checkpoint.topology = std::move(result.topology);
  checkpoint.epoch = config.train.epochs;
  SaveCheckpoint(checkpoint_path, checkpoint);
  out << "wrote " << checkpoint_path.string() << '\n';
  return kExitOk;
}

Dataset EvalDataset(const EvalArgs& args, const Checkpoint& cp,
                    std::vector<std::string>& warnings) {
  const Topology& t = cp.topology;
  const std::size_t inputs = t.size(0);
  if (!args.images.empty() || !args.labels.empty()) {
    if (args.images.empty() || args.labels.empty()) {
      throw ValidationError("--images and --labels must be given together");
    }
    const auto images = LoadIdx(args.images, args.labels);
    for (std::size_t i = 0; i < images.size(); ++i) {
      if (images[i].pixels.size() != inputs) {
        throw DataError("image " + std::to_string(i) +
                        " does not match the input layer size " +
                        std::to_string(inputs));
      }
    }
    EncodeOptions options;
    options.duration = args.duration.value_or(400.0);
    options.scale = args.scale;
    options.seed = args.seed;
    options.step = cp.params.sim_step;
    Dataset d = EncodeImages(images, options);
    d.num_inputs = inputs;
    return d;
  }
  if (!args.events.empty() || !args.event_labels.empty()) {
    if (args.events.empty() || args.event_labels.empty()) {
      throw ValidationError("--events and --event-labels must be given together");
    }
    Dataset d;
    d.num_inputs = inputs;
    d.samples = LoadEventCsv(args.events, args.event_labels, inputs,
                             args.duration.value_or(400.0), &warnings);
    for (const auto& s : d.samples) {
      d.num_classes = std::max(d.num_classes, s.label + 1);
    }
    return d;
  }
  if (!args.config.empty()) {
    RunConfig config = LoadConfig(args.config);
    config.neuron = cp.params;
    config.layers = t.layers;
    LoadedData data = LoadData(config);
    warnings = data.warnings;
    return data.test.empty() ? std::move(data.train) : std::move(data.test);
  }
  throw ValidationError(
      "eval needs --config, --images/--labels or --events/--event-labels");
}

int Eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  const Checkpoint cp = LoadCheckpoint(args.checkpoint);
  std::vector<std::string> warnings;
  Dataset data = EvalDataset(args, cp, warnings);
  for (const std::string& w : warnings) err << "warning: " << w << '\n';
  if (data.empty()) throw DataError("evaluation dataset is empty");
  const std::size_t outputs = cp.topology.size(cp.topology.output_layer());
  if (data.num_classes > outputs) {
    throw DataError("dataset has " + std::to_string(data.num_classes) +
                    " classes but the checkpoint has " +
                    std::to_string(outputs) + " outputs");
  }
  data.num_classes = outputs;
  CheckDataset(data, cp.params);
  if (args.dry_run) {
    out << "dry run: checkpoint and " << data.size() << " samples valid\n";
    return kExitOk;
  }
  const EvalResult r = Evaluate(data, cp.topology, cp.params, TrainConfig{});
  out << "accuracy=" << Fixed(r.accuracy) << '\n';
  out << "samples=" << r.total << '\n';
  out << "confusion (row: true class, column: predicted)\n";
  for (std::size_t c = 0; c < r.confusion.size(); ++c) {
    out << c << ':';
    for (std::size_t n : r.confusion[c]) out << ' ' << n;
    out << '\n';
  }
  return kExitOk;
}

int Gradcheck(const GradcheckArgs& args, std::ostream& out) {
  oracle::GradCheckOptions options;
  options.seed = args.seed;
  options.instances = args.instances;
  options.max_neurons = args.max_neurons;
  options.max_layers = args.max_layers;
  options.h = args.h;
  options.solver = ParseSolver(args.solver);
  options.inject_fault = args.inject_fault;
  if (options.instances < 1) throw ValidationError("--instances must be >= 1");
  if (!(options.h >= 1e-6 && options.h <= 1e-4)) {
    throw ValidationError("--step must lie in [1e-6, 1e-4]");
  }
  out << "gradcheck seed=" << args.seed << " instances=" << args.instances
      << " solver=" << SolverName(options.solver)
      << (args.inject_fault ? " inject_fault=1" : "") << '\n';
  if (args.dry_run) {
    out << "dry run: options valid\n";
    return kExitOk;
  }
  const oracle::GradCheckReport r = oracle::RunGradientCheck(options);
  out << "entries_checked=" << r.entries_checked << '\n';
  out << "max_fd_relative_error=" << Sci(r.max_fd_relative_error)
      << " tolerance=" << Sci(options.fd_tolerance) << '\n';
  out << "max_naive_gradient_error=" << Sci(r.max_naive_gradient_error)
      << " tolerance=" << Sci(options.naive_tolerance) << '\n';
  out << "max_naive_p_error=" << Sci(r.max_naive_p_error)
      << " tolerance=" << Sci(options.naive_tolerance) << '\n';
  if (r.passed()) {
    out << "PASS\n";
    return kExitOk;
  }
  out << "FAIL " << r.failures.size() << " checks out of tolerance\n";
  constexpr std::size_t kShown = 10;
  for (std::size_t i = 0; i < r.failures.size() && i < kShown; ++i) {
    out << "  " << r.failures[i] << '\n';
  }
  if (r.failures.size() > kShown) {
    out << "  ... " << r.failures.size() - kShown << " more\n";
  }
  return kExitValidation;
}

int Encode(const EncodeArgs& args, std::ostream& out) {
  if (!(args.scale >= 0.0 && args.scale <= 1.0)) {
    throw ValidationError("--scale must lie in [0, 1]");
  }
  if (!(args.duration > 0.0 && args.step > 0.0)) {
    throw ValidationError("--duration and --step must be > 0");
  }
  const auto images = LoadIdx(args.images, args.labels);
  if (args.dry_run) {
    out << "dry run: " << images.size() << " images readable\n";
    return kExitOk;
  }
  EncodeOptions options;
  options.duration = args.duration;
  options.scale = args.scale;
  options.seed = args.seed;
  options.step = args.step;
  const Dataset d = EncodeImages(images, options);
  const fs::path dir(args.out);
  fs::create_directories(dir);
  WriteEventCsv(dir / "events.csv", dir / "labels.csv", d.samples);
  out << "encoded " << d.size() << " samples into " << dir.string() << '\n';
  return kExitOk;
}

int ValidateCommand(const ValidateArgs& args, std::ostream& out,
                    std::ostream& err) {
  if (args.config.empty() && args.checkpoint.empty()) {
    throw ValidationError("validate needs --config and/or --checkpoint");
  }
  if (!args.config.empty()) {
    const RunConfig config = LoadConfig(args.config);
    const LoadedData data = LoadData(config);
    for (const std::string& w : data.warnings) err << "warning: " << w << '\n';
    out << "config ok: " << data.train.size() << " train / "
        << data.test.size() << " test samples\n";
  }
  if (!args.checkpoint.empty()) {
    const Checkpoint cp = LoadCheckpoint(args.checkpoint);
    out << "checkpoint ok: epoch " << cp.epoch << ", " << cp.topology.num_layers()
        << " layers\n";
  }
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Spike-train level backpropagation for recurrent SNNs",
               "strsbp"};
  app.require_subcommand(1);

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train from a config file");
  train_cmd->add_option("--config", train.config, "JSON run config")
      ->required();
  train_cmd->add_option("--seed", train.seed, "Override the config seed");
  train_cmd->add_option("--epochs", train.epochs, "Override train.epochs");
  train_cmd->add_option("--out", train.out, "Output directory");
  train_cmd->add_option("--solver", train.solver, "exact or taylor");
  train_cmd->add_flag("--dry-run", train.dry_run, "Validate and exit");

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->required();
  eval_cmd->add_option("--config", eval.config,
                       "Evaluate on the config's test split");
  eval_cmd->add_option("--images", eval.images, "IDX image file");
  eval_cmd->add_option("--labels", eval.labels, "IDX label file");
  eval_cmd->add_option("--events", eval.events, "Event CSV");
  eval_cmd->add_option("--event-labels", eval.event_labels, "Event labels CSV");
  eval_cmd->add_option("--duration", eval.duration, "Sample duration in ms");
  eval_cmd->add_option("--scale", eval.scale, "Poisson scale f");
  eval_cmd->add_option("--seed", eval.seed, "Encoding seed");
  eval_cmd->add_flag("--dry-run", eval.dry_run);

  GradcheckArgs grad;
  CLI::App* grad_cmd =
      app.add_subcommand("gradcheck", "Check gradients against the oracles");
  grad_cmd->add_option("--seed", grad.seed);
  grad_cmd->add_option("--instances", grad.instances);
  grad_cmd->add_option("--max-neurons", grad.max_neurons);
  grad_cmd->add_option("--max-layers", grad.max_layers);
  grad_cmd->add_option("--step", grad.h, "Finite-difference step");
  grad_cmd->add_option("--solver", grad.solver, "exact or taylor");
  grad_cmd->add_flag("--inject-fault", grad.inject_fault,
                     "Drop the recurrent coupling (negative control)");
  grad_cmd->add_flag("--dry-run", grad.dry_run);

  EncodeArgs enc;
  CLI::App* enc_cmd =
      app.add_subcommand("encode", "Poisson-encode IDX images to event CSV");
  enc_cmd->add_option("--images", enc.images)->required();
  enc_cmd->add_option("--labels", enc.labels)->required();
  enc_cmd->add_option("--out", enc.out, "Output directory")->required();
  enc_cmd->add_option("--duration", enc.duration);
  enc_cmd->add_option("--scale", enc.scale);
  enc_cmd->add_option("--step", enc.step);
  enc_cmd->add_option("--seed", enc.seed);
  enc_cmd->add_flag("--dry-run", enc.dry_run);

  ValidateArgs val;
  CLI::App* val_cmd =
      app.add_subcommand("validate", "Validate a config and/or checkpoint");
  val_cmd->add_option("--config", val.config);
  val_cmd->add_option("--checkpoint", val.checkpoint);
  val_cmd->add_flag("--dry-run", val.dry_run);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*train_cmd) return Train(train, out, err);
    if (*eval_cmd) return Eval(eval, out, err);
    if (*grad_cmd) return Gradcheck(grad, out);
    if (*enc_cmd) return Encode(enc, out);
    return ValidateCommand(val, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace strsbp::cli
