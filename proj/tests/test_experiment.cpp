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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "spq/error.hpp"
#include "spq/experiment.hpp"
#include "spq/model_io.hpp"

using namespace spq;
namespace fs = std::filesystem;

namespace {

nlohmann::json tiny_json() {
  return nlohmann::json::parse(R"({
    "seed": 3,
    "task": "toy_disparity",
    "data": {"n_train": 96, "n_eval": 32, "length": 4, "max_shift": 2},
    "model": {"input_shape": [8],
              "layers": [{"type": "dense", "out": 12}, {"type": "relu"},
                         {"type": "dense", "out": 4}]},
    "loss": "mse",
    "metric": "threshold:1",
    "train": {"epochs": 5, "learning_rate": 0.01, "momentum": 0.9, "batch_size": 16},
    "prune": {"threshold": 1e-7, "max_epochs": 3, "granularity": "epoch"},
    "quant": {"bits": 5, "schedule": [0.5, 1.0], "retrain_epochs": 1}
  })");
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("spq_exp_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config round trip through json") {
  const ExperimentConfig c = ExperimentConfig::from_json(tiny_json());
  CHECK(c.seed == 3);
  CHECK(c.model.layers.size() == 3);
  CHECK(c.prune.granularity == ScoreGranularity::PerEpoch);
  CHECK(c.finetune.learning_rate == c.train.learning_rate);
  const auto j = c.to_json();
  CHECK(ExperimentConfig::from_json(j).to_json() == j);
}

TEST_CASE("config errors") {
  auto j = tiny_json();
  j["tpyo"] = 1;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = tiny_json();
  j["prune"]["strategy"] = "medium";
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = tiny_json();
  j["quant"]["schedule"] = {0.5, 0.9};
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = tiny_json();
  j.erase("model");
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = tiny_json();
  j["train"]["epochs"] = "many";
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = tiny_json();
  j["task"] = "imagenet";
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/c.json"), ConfigError);
}

TEST_CASE("stage seeds are distinct") {
  CHECK(stage_seed(1, SeedStream::Prune) != stage_seed(1, SeedStream::Quantize));
  CHECK(stage_seed(1, SeedStream::Prune) != stage_seed(2, SeedStream::Prune));
  CHECK(stage_seed(1, SeedStream::Prune) == stage_seed(1, SeedStream::Prune));
}

TEST_CASE("pipeline artifacts, determinism and stage composability") {
  const ExperimentConfig c = ExperimentConfig::from_json(tiny_json());
  const fs::path a = fresh_dir("a"), b = fresh_dir("b"), s = fresh_dir("s");
  const auto rows = run_pipeline(c, a);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].stage == "baseline");
  CHECK(rows[0].memory_ratio == 1.0);
  CHECK(rows[2].cost.quantized);
  run_pipeline(c, b);

  const Datasets d = make_datasets(c);
  stage_train(c, d, s);
  stage_prune(c, d, s / artifacts::kBaseline, s);
  stage_quantize(c, d, s / artifacts::kPruned, s);
  summarize(c, d, s);

  for (const char* f : {artifacts::kBaseline, artifacts::kPruned, artifacts::kQuantized,
                        artifacts::kTrainLog, artifacts::kPruneCsv, artifacts::kQuantCsv,
                        artifacts::kSummaryCsv, artifacts::kCostJson, artifacts::kVerifyJson}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(slurp(a / f) == slurp(s / f));
  }
  CHECK(slurp(a / artifacts::kConfigJson) == slurp(b / artifacts::kConfigJson));
  const auto verify = nlohmann::json::parse(slurp(a / artifacts::kVerifyJson));
  CHECK(verify.at("max_abs_diff").get<double>() == 0.0);

  const std::string report = format_report(a);
  CHECK(report.find("baseline") != std::string::npos);
  CHECK(report.find("quantized") != std::string::npos);
}

TEST_CASE("quantize-only run and comparison") {
  auto j = tiny_json();
  j["prune"]["enabled"] = false;
  const fs::path q = fresh_dir("q"), p = fresh_dir("p");
  const auto rows = run_pipeline(ExperimentConfig::from_json(j), q);
  CHECK(rows.size() == 2);
  CHECK_FALSE(fs::exists(q / artifacts::kPruned));
  run_pipeline(ExperimentConfig::from_json(tiny_json()), p);
  const std::string csv = compare_runs(q, p);
  CHECK(csv.rfind("step_fraction,sparsity_a,eval_metric_a,sparsity_b,eval_metric_b\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + fractions 0, 0.5, 1
  CHECK_THROWS_AS(compare_runs(q, "/nonexistent"), FormatError);
}

TEST_CASE("a failing stage names itself and keeps earlier artifacts") {
  auto j = tiny_json();
  j["finetune"] = {{"learning_rate", 1e12}};
  const fs::path out = fresh_dir("fail");
  try {
    run_pipeline(ExperimentConfig::from_json(j), out);
    FAIL("expected an error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("prune") != std::string::npos);
  }
  CHECK(fs::exists(out / artifacts::kBaseline));
  CHECK(fs::exists(out / artifacts::kTrainLog));
  CHECK_FALSE(fs::exists(out / artifacts::kPruned));
}

TEST_CASE("criterion sweep csv") {
  const ExperimentConfig c = ExperimentConfig::from_json(tiny_json());
  const Datasets d = make_datasets(c);
  const Model base = build_model(c.model, 1);
  const auto runs = criterion_sweep(c, d, base, {1e-8, 1e-7}, {0.05});
  REQUIRE(runs.size() == 3);
  const std::string csv = sweep_csv(runs);
  CHECK(csv.rfind("criterion,threshold,epoch,sparsity,train_loss,eval_metric\n", 0) == 0);
  CHECK(csv.find("\nabs,0.05,0,") != std::string::npos);
  CHECK(csv.find("\ntaylor,1e-08,") != std::string::npos);
}
