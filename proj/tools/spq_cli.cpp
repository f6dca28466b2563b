/*
 * Copyright (c) 2026 The spq Authors. All Rights Reserved
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: data generation, the individual stages, the
// full pipeline and reporting.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "spq/error.hpp"
#include "spq/experiment.hpp"
#include "spq/model_io.hpp"

namespace fs = std::filesystem;
using namespace spq;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

// SPQ_OUT_DIR, when set, replaces any --out directory.
fs::path output_dir(const std::string& flag) {
  if (const char* env = std::getenv("SPQ_OUT_DIR"); env && *env) return env;
  if (flag.empty()) throw ConfigError("--out is required (or set SPQ_OUT_DIR)");
  return flag;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_st("spq");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("SPQ_LOG_LEVEL"); env && *env) {
    const auto lvl = spdlog::level::from_str(env);
    if (lvl == spdlog::level::off && std::string(env) != "off")
      throw ConfigError(std::string("unknown SPQ_LOG_LEVEL '") + env + "'");
    spdlog::set_level(lvl);
  }
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw FormatError("cannot write " + p.string());
  out << text;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "' in list");
    }
  }
  return out;
}

struct Args {
  std::string config, out, model, data, metric = "threshold:1", task;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::vector<std::size_t> input_shape;
  std::string run_a, run_b, taylor = "1e-10,1e-9,1e-8", abs = "0.02,0.05,0.1";
};

int run(int argc, char** argv) {
  CLI::App app{"spq: prune-then-quantize toolkit"};
  app.require_subcommand(1);
  Args a;

  auto* gen = app.add_subcommand("gen-data", "synthesize a dataset as CSV");
  gen->add_option("--config", a.config, "write train.csv and eval.csv for this config");
  gen->add_option("--task", a.task, "toy_disparity or toy_classify");
  gen->add_option("--seed", a.seed, "generator seed");
  gen->add_option("--n", a.n, "number of samples");
  gen->add_option("--out", a.out, "output file (--task) or directory (--config)");

  auto* train = app.add_subcommand("train", "train the baseline model");
  train->add_option("--config", a.config)->required();
  train->add_option("--out", a.out);

  auto* prune = app.add_subcommand("prune", "prune a model");
  prune->add_option("--config", a.config)->required();
  prune->add_option("--model", a.model)->required();
  prune->add_option("--out", a.out);

  auto* quant = app.add_subcommand("quantize", "quantize a model to powers of two");
  quant->add_option("--config", a.config)->required();
  quant->add_option("--model", a.model)->required();
  quant->add_option("--out", a.out);

  auto* pipe = app.add_subcommand("pipeline", "train, prune, quantize and verify");
  pipe->add_option("--config", a.config)->required();
  pipe->add_option("--out", a.out);

  auto* eval = app.add_subcommand("eval", "evaluate a model on a CSV dataset");
  eval->add_option("--model", a.model)->required();
  eval->add_option("--data", a.data)->required();
  eval->add_option("--metric", a.metric, "threshold:T, delta:T, mse or top1");
  eval->add_option("--input-shape", a.input_shape, "per-sample input shape");

  auto* report = app.add_subcommand("report", "print the stage summary of a run");
  report->add_option("run", a.run_a)->required();

  auto* compare = app.add_subcommand("compare", "join two runs' quantization steps");
  compare->add_option("run_a", a.run_a)->required();
  compare->add_option("run_b", a.run_b)->required();
  compare->add_option("--out", a.out, "CSV file (default: stdout)");

  auto* sweep = app.add_subcommand("sweep", "Taylor vs magnitude pruning trajectories");
  sweep->add_option("--config", a.config)->required();
  sweep->add_option("--model", a.model)->required();
  sweep->add_option("--taylor", a.taylor, "comma-separated Taylor thresholds");
  sweep->add_option("--abs", a.abs, "comma-separated magnitude thresholds");
  sweep->add_option("--out", a.out, "CSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  setup_logging();

  if (gen->parsed()) {
    if (!a.config.empty()) {
      const auto cfg = ExperimentConfig::load(a.config);
      const fs::path dir = output_dir(a.out);
      fs::create_directories(dir);
      const Datasets d = make_datasets(cfg);
      save_csv(d.train, dir / "train.csv");
      save_csv(d.eval, dir / "eval.csv");
      spdlog::info("wrote {} and {} samples to {}", d.train.size(), d.eval.size(),
                   dir.string());
    } else {
      if (a.task.empty() || a.n == 0 || a.out.empty())
        throw ConfigError("gen-data needs --config, or --task, --n and --out");
      save_csv(gen_data(parse_task(a.task), a.seed, a.n), a.out);
    }
  } else if (train->parsed() || prune->parsed() || quant->parsed()) {
    const auto cfg = ExperimentConfig::load(a.config);
    const fs::path dir = output_dir(a.out);
    fs::create_directories(dir);
    const Datasets d = make_datasets(cfg);
    const auto c = resolve_input_shape(cfg, d);
    if (train->parsed()) stage_train(c, d, dir);
    if (prune->parsed()) stage_prune(c, d, a.model, dir);
    if (quant->parsed()) stage_quantize(c, d, a.model, dir);
    spdlog::info("stage finished, artifacts in {}", dir.string());
  } else if (pipe->parsed()) {
    const auto cfg = ExperimentConfig::load(a.config);
    const fs::path dir = output_dir(a.out);
    run_pipeline(cfg, dir);
    std::cout << format_report(dir);
  } else if (eval->parsed()) {
    const Model m = load_model(a.model);
    Dataset d = load_csv(a.data);
    if (!a.input_shape.empty()) d.reshape_inputs(a.input_shape);
    std::printf("%.4f\n", evaluate_metric(m, d, MetricSpec::parse(a.metric)));
  } else if (report->parsed()) {
    std::cout << format_report(a.run_a);
  } else if (compare->parsed()) {
    const std::string csv = compare_runs(a.run_a, a.run_b);
    if (a.out.empty()) std::cout << csv;
    else write_file(a.out, csv);
  } else if (sweep->parsed()) {
    const auto cfg = ExperimentConfig::load(a.config);
    const Datasets d = make_datasets(cfg);
    const Model base = load_model(a.model);
    const auto runs = criterion_sweep(resolve_input_shape(cfg, d), d, base,
                                      parse_list(a.taylor), parse_list(a.abs));
    const std::string csv = sweep_csv(runs);
    if (a.out.empty()) std::cout << csv;
    else write_file(a.out, csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "spq: numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const Error& e) {
    std::fprintf(stderr, "spq: %s\n", e.what());
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "spq: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "spq: internal error: %s\n", e.what());
    return 1;
  }
}
