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

// Runs the acceptance criteria A1..A8 and prints one line per criterion:
//   A<n> PASS|FAIL <summary>
// Usage: strsbp_acceptance [A1 A2 ...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "commands.h"
#include "config.h"
#include "strsbp/backprop.h"
#include "strsbp/error.h"
#include "strsbp/linalg.h"
#include "strsbp/optimize.h"
#include "strsbp/oracle.h"
#include "strsbp/simulate.h"
#include "strsbp/spsp.h"

namespace strsbp {
namespace {

namespace fs = std::filesystem;

const fs::path kSourceDir = STRSBP_SOURCE_DIR;

struct Outcome {
  bool pass = false;
  std::string summary;
};

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("strsbp_acceptance_" + tag + "_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Random layer systems shared by A1 and A5.

struct SystemInstance {
  LayerSystem system;
  double condition = 0.0;
  double q = 0.0;  // |Omega^{-1} Theta|_inf
};

Matrix SystemMatrix(const LayerSystem& s) {
  const std::size_t n = s.omega.size();
  Matrix a(n, n);
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t p = 0; p < n; ++p) a(l, p) = -s.theta(l, p);
    a(l, l) = s.omega[l];
  }
  return a;
}

Matrix Identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<SystemInstance> RandomSystems(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size(1, 50);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> log_scale(-3.0, 0.5);
  std::vector<SystemInstance> out;
  while (static_cast<int>(out.size()) < count) {
    const std::size_t n = size(rng);
    const std::size_t m = size(rng);
    LayerSystem s;
    s.omega.resize(n);
    for (double& w : s.omega) w = (u(rng) < 0 ? -1.0 : 1.0) * (0.2 + std::abs(u(rng)));
    const double scale = std::pow(10.0, log_scale(rng)) / std::sqrt(double(n));
    s.theta = Matrix(n, n);
    s.phi = Matrix(n, m);
    for (std::size_t l = 0; l < n; ++l) {
      for (std::size_t p = 0; p < n; ++p) {
        if (p != l) s.theta(l, p) = scale * u(rng);
      }
      for (std::size_t i = 0; i < m; ++i) s.phi(l, i) = u(rng);
    }
    const Matrix a = SystemMatrix(s);
    const LuDecomposition lu(a);
    if (lu.singular()) continue;
    SystemInstance inst;
    inst.condition = InfNorm(a) * InfNorm(lu.Solve(Identity(n)));
    if (!(inst.condition < 1e4)) continue;
    for (std::size_t l = 0; l < n; ++l) {
      double row = 0.0;
      for (std::size_t p = 0; p < n; ++p) row += std::abs(s.theta(l, p));
      inst.q = std::max(inst.q, row / std::abs(s.omega[l]));
    }
    inst.system = std::move(s);
    out.push_back(std::move(inst));
  }
  return out;
}

Outcome A1() {
  const auto start = std::chrono::steady_clock::now();
  const auto systems = RandomSystems(100, 1);
  double worst = 0.0;
  int failures = 0;
  for (const SystemInstance& inst : systems) {
    const LayerSystem& s = inst.system;
    const Matrix p = SolvePExact(s);
    const Matrix residual = Subtract(Multiply(SystemMatrix(s), p), s.phi);
    const double ratio = InfNorm(residual) / (1.0 + InfNorm(s.phi));
    worst = std::max(worst, ratio);
    failures += ratio > 1e-9;
  }
  const double seconds = Seconds(start);
  return {failures == 0 && seconds < 5.0,
          Format("100 systems, max residual/(1+|Phi|)=%.3e (limit 1e-9), %.2f s (limit 5 s)",
                 worst, seconds)};
}

Outcome A2() {
  const auto start = std::chrono::steady_clock::now();
  const oracle::GradCheckReport r = oracle::RunGradientCheck({});
  const double seconds = Seconds(start);
  std::string summary = Format(
      "%d instances, %zu entries, max FD rel err=%.3e (limit 1e-4), max naive err=%.3e "
      "(limit 1e-10), %.2f s (limit 60 s)",
      r.instances, r.entries_checked, r.max_fd_relative_error,
      r.max_naive_gradient_error, seconds);
  if (!r.passed()) summary += "; first failure: " + r.failures.front();
  return {r.passed() && seconds < 60.0, summary};
}

// Trains the synthetic task of configs/synthetic.json for up to 50 epochs and
// stops at the first epoch where `reached` holds.
struct SeedRun {
  bool reached = false;
  int epoch = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

SeedRun RunSyntheticSeed(std::uint64_t seed, Solver solver,
                         const std::function<bool(const EpochMetrics&)>& reached) {
  cli::RunConfig config = cli::LoadConfig(kSourceDir / "configs/synthetic.json");
  config.seed = seed;
  config.train.seed = seed;
  config.train.epochs = 50;
  config.train.solver = solver;
  const cli::LoadedData data = cli::LoadData(config);
  SeedRun run;
  TrainHooks hooks;
  hooks.should_stop = [&](const EpochMetrics& m) {
    run.epoch = m.epoch;
    run.train_accuracy = m.train_accuracy;
    run.test_accuracy = m.test_accuracy;
    run.reached = reached(m);
    return run.reached;
  };
  Train(data.train, &data.test, InitWeights(Topology::Zeros(config.layers), seed),
        config.neuron, config.train, hooks);
  return run;
}

std::string DescribeRuns(const std::vector<SeedRun>& runs) {
  std::string s;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    s += Format("%sseed %zu: %s epoch %d train %.3f test %.3f", i ? "; " : "", i + 1,
                runs[i].reached ? "reached at" : "missed, last", runs[i].epoch,
                runs[i].train_accuracy, runs[i].test_accuracy);
  }
  return s;
}

Outcome A3() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<SeedRun> runs;
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    runs.push_back(RunSyntheticSeed(seed, Solver::kExact, [](const EpochMetrics& m) {
      return m.train_accuracy == 1.0 && m.test_accuracy >= 0.95;
    }));
    ok += runs.back().reached;
  }
  const double seconds = Seconds(start);
  return {ok >= 4 && seconds < 600.0,
          Format("%d/5 seeds reached 100%% train and >=95%% test within 50 epochs "
                 "(need 4), %.1f s (limit 600 s) [",
                 ok, seconds) +
              DescribeRuns(runs) + "]"};
}

Outcome A4() {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> size(2, 12);
  std::uniform_real_distribution<double> threshold(0.8, 3.0);
  std::bernoulli_distribution coin(0.5);
  double worst = 0.0;
  int episodes_with_spikes = 0;
  for (int ep = 0; ep < 20; ++ep) {
    const std::size_t n_in = size(rng), n_hidden = size(rng), n_out = size(rng);
    Topology rec = InitWeights(Topology::Zeros({{LayerKind::kInput, n_in, 0.0},
                                                {LayerKind::kRecurrent, n_hidden, 0.5},
                                                {LayerKind::kFeedforward, n_out, 0.0}}),
                               rng());
    for (double& w : rec.recurrent[1].values()) w = 0.0;
    Topology ff = Topology::Zeros({{LayerKind::kInput, n_in, 0.0},
                                   {LayerKind::kFeedforward, n_hidden, 0.0},
                                   {LayerKind::kFeedforward, n_out, 0.0}});
    ff.feedforward = rec.feedforward;
    NeuronParams params;
    params.default_threshold = threshold(rng);
    std::bernoulli_distribution fire(0.15);
    std::vector<SpikeTrain> input(n_in);
    for (auto& t : input) {
      for (int s = 0; s < 200; ++s) {
        if (fire(rng)) t.times.push_back(s);
      }
    }
    TableauOptions options;
    options.probe_silent = coin(rng);
    const PartialsKind kind = coin(rng) ? PartialsKind::kPreRate
                                        : PartialsKind::kRateProportional;
    const auto partials = MakeCountPartials(kind);
    std::vector<double> labels(n_out, 1.0);
    labels[0] = 4.0;
    const Episode er = RunForward(rec, params, input, 200);
    const Episode ef = RunForward(ff, params, input, 200);
    episodes_with_spikes += er.counts[1] != std::vector<int>(n_hidden, 0);
    const SpsapTableau tr = ComputeTableau(er, rec, params, *partials, options);
    const SpsapTableau tf = ComputeTableau(ef, ff, params, *partials, options);
    GradientSet gr, gf;
    bool r_singular = false, f_singular = false;
    try {
      gr = Backward(er, tr, rec, params, labels);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumeric) throw;
      r_singular = true;
    }
    try {
      gf = Backward(ef, tf, ff, params, labels);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumeric) throw;
      f_singular = true;
    }
    if (r_singular != f_singular) {
      return {false, Format("episode %d: only one declaration reported a singular system", ep)};
    }
    if (r_singular) continue;
    for (std::size_t k = 1; k < 3; ++k) {
      worst = std::max(worst, MaxAbsDifference(gr.feedforward[k], gf.feedforward[k]));
    }
  }
  return {worst <= 1e-12 && episodes_with_spikes >= 10,
          Format("20 episodes (%d with hidden spikes), max |g_rec - g_ff|=%.3e (limit 1e-12)",
                 episodes_with_spikes, worst)};
}

Outcome A5() {
  const auto start = std::chrono::steady_clock::now();
  const auto systems = RandomSystems(100, 1);
  int eligible = 0, violations = 0;
  double worst_ratio = 0.0;
  for (const SystemInstance& inst : systems) {
    if (inst.q > 0.2) continue;
    ++eligible;
    const LayerSystem& s = inst.system;
    Matrix omega_inv_phi = s.phi;
    for (std::size_t l = 0; l < s.omega.size(); ++l) {
      for (double& x : omega_inv_phi.row(l)) x /= s.omega[l];
    }
    const double bound = inst.q * inst.q / (1.0 - inst.q) * InfNorm(omega_inv_phi);
    const double err = InfNorm(Subtract(SolvePTaylor(s), SolvePExact(s)));
    if (err > bound * (1.0 + 1e-9) + 1e-14) ++violations;
    if (bound > 0) worst_ratio = std::max(worst_ratio, err / bound);
  }
  std::vector<SeedRun> runs;
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    runs.push_back(RunSyntheticSeed(seed, Solver::kTaylor, [](const EpochMetrics& m) {
      return m.test_accuracy >= 0.90;
    }));
    ok += runs.back().reached;
  }
  const double seconds = Seconds(start);
  return {violations == 0 && eligible >= 10 && ok >= 4,
          Format("%d/%d eligible systems (q<=0.2) within the Neumann bound, max err/bound=%.3f; "
                 "taylor training: %d/5 seeds reached >=90%% test (need 4), %.1f s [",
                 eligible - violations, eligible, worst_ratio, ok, seconds) +
              DescribeRuns(runs) + "]"};
}

Outcome A6() {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> size(10, 40);
  std::uniform_real_distribution<double> rate(0.02, 0.1);
  std::uniform_real_distribution<double> threshold(5.0, 15.0);
  std::size_t checked = 0, within = 0;
  double worst = 0.0;
  for (int net = 0; net < 50; ++net) {
    const std::size_t n_in = size(rng), n_hidden = size(rng), n_out = size(rng) / 4;
    Topology t = InitWeights(Topology::Zeros({{LayerKind::kInput, n_in, 0.0},
                                              {LayerKind::kRecurrent, n_hidden, 0.2},
                                              {LayerKind::kFeedforward, n_out, 0.0}}),
                             rng());
    NeuronParams params;
    params.default_threshold = threshold(rng);
    // Bias the input weights positive so that the hidden layer is driven.
    for (double& w : t.feedforward[1].values()) w = 0.5 * w + 1.0;
    for (double& w : t.feedforward[2].values()) w = 0.5 * w + 1.0;
    std::bernoulli_distribution fire(rate(rng));
    std::vector<SpikeTrain> input(n_in);
    for (auto& train : input) {
      for (int s = 0; s < 400; ++s) {
        if (fire(rng)) train.times.push_back(s);
      }
    }
    Episode e = RunForward(t, params, input, 400);
    const SpsapTableau tab = ComputeTableau(e, t, params);
    for (std::size_t k = 1; k < 3; ++k) {
      const auto a = ComputeTpsp(tab, t, k);
      const double nu = params.Threshold(k);
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double o = e.counts[k][i];
        if (o < 3) continue;
        ++checked;
        const double gap = std::abs(a[i] / nu - o);
        worst = std::max(worst, gap / (1.0 + 0.15 * o));
        within += gap <= 1.0 + 0.15 * o;
      }
    }
  }
  const double fraction = checked ? double(within) / double(checked) : 0.0;
  return {checked >= 200 && fraction >= 0.95,
          Format("%zu/%zu neurons with o>=3 satisfy |a/nu - o| <= 1 + 0.15 o (%.2f%%, need 95%%), "
                 "max gap/allowance=%.3f",
                 within, checked, 100.0 * fraction, worst)};
}

struct MetricsRow {
  int epoch = 0;
  double test_accuracy = NAN;
};

std::vector<MetricsRow> ReadMetrics(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() < 4) continue;
    MetricsRow r;
    r.epoch = std::stoi(fields[0]);
    if (!fields[3].empty()) r.test_accuracy = std::stod(fields[3]);
    rows.push_back(r);
  }
  return rows;
}

Outcome A7() {
  TempDir dir("a7");
  const auto start = std::chrono::steady_clock::now();
  std::ostringstream out, err;
  const int code = cli::RunCli({"train", "--config",
                                (kSourceDir / "configs/mnist_subset.json").string(),
                                "--epochs", "20", "--out", dir.path().string()},
                               out, err);
  const double seconds = Seconds(start);
  if (code != 0) return {false, Format("train exited %d: %s", code, err.str().c_str())};
  const auto rows = ReadMetrics(dir.path() / "metrics.csv");
  if (rows.empty()) return {false, "metrics.csv has no rows"};
  double best = 0.0;
  for (const auto& r : rows) {
    if (!std::isnan(r.test_accuracy)) best = std::max(best, r.test_accuracy);
  }
  const double final_acc = rows.back().test_accuracy;
  return {final_acc >= 0.85 && seconds < 45 * 60.0,
          Format("2000/500 MNIST subset, 784-R100-10, %zu epochs: final test accuracy %.4f "
                 "(need 0.85), best %.4f, %.0f s (limit 2700 s)",
                 rows.size(), final_acc, best, seconds)};
}

Outcome A8() {
  TempDir dir("a8");
  const std::string config = (kSourceDir / "configs/synthetic.json").string();
  std::vector<std::string> metrics, checkpoints;
  for (const char* run : {"first", "second"}) {
    const fs::path out_dir = dir.path() / run;
    std::ostringstream out, err;
    const int code = cli::RunCli(
        {"train", "--config", config, "--epochs", "3", "--out", out_dir.string()}, out, err);
    if (code != 0) return {false, Format("train exited %d: %s", code, err.str().c_str())};
    metrics.push_back(Slurp(out_dir / "metrics.csv"));
    checkpoints.push_back(Slurp(out_dir / "checkpoint.txt"));
  }
  const bool same_metrics = metrics[0] == metrics[1] && !metrics[0].empty();
  const bool same_checkpoint = checkpoints[0] == checkpoints[1];
  return {same_metrics && same_checkpoint,
          Format("two 3-epoch runs: metrics.csv %s (%zu bytes), checkpoint %s",
                 same_metrics ? "byte-identical" : "DIFFERENT", metrics[0].size(),
                 same_checkpoint ? "byte-identical" : "DIFFERENT")};
}

}  // namespace
}  // namespace strsbp

int main(int argc, char** argv) {
  using strsbp::Outcome;
  const std::map<std::string, std::function<Outcome()>> criteria = {
      {"A1", strsbp::A1}, {"A2", strsbp::A2}, {"A3", strsbp::A3},
      {"A4", strsbp::A4}, {"A5", strsbp::A5}, {"A6", strsbp::A6},
      {"A7", strsbp::A7}, {"A8", strsbp::A8}};
  std::vector<std::string> wanted(argv + 1, argv + argc);
  if (wanted.empty()) {
    for (const auto& [name, fn] : criteria) wanted.push_back(name);
  }
  bool all = true;
  for (const std::string& name : wanted) {
    const auto it = criteria.find(name);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << name << '\n';
      return 2;
    }
    Outcome o;
    try {
      o = it->second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << name << (o.pass ? " PASS " : " FAIL ") << o.summary << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
