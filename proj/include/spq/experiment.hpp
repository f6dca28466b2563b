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

#ifndef SPQ_EXPERIMENT_HPP_
#define SPQ_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spq/autodiff.hpp"
#include "spq/costmodel.hpp"
#include "spq/data.hpp"
#include "spq/metrics.hpp"
#include "spq/model.hpp"
#include "spq/pruning.hpp"
#include "spq/quantization.hpp"
#include "spq/training.hpp"

namespace spq {

struct DataConfig {
  std::size_t n_train = 2000;
  std::size_t n_eval = 500;
  DataParams params;
  std::filesystem::path eval_csv_path;  // csv_regression only; optional
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  Task task = Task::ToyDisparity;
  DataConfig data;
  ModelSpec model;
  LossKind loss = LossKind::MSE;
  MetricSpec metric;
  TrainConfig train;
  TrainConfig finetune;  // pruning and quantization retraining
  bool prune_enabled = true;
  PruneConfig prune;
  bool quant_enabled = true;
  QuantConfig quant;
  CostParams cost;

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
};

// Independent stream per stage, derived from the experiment seed.
enum class SeedStream : std::uint64_t {
  TrainData = 1,
  EvalData,
  ModelInit,
  Baseline,
  Prune,
  Quantize
};
std::uint64_t stage_seed(std::uint64_t seed, SeedStream stream);

struct Datasets {
  Dataset train;
  Dataset eval;
};
// Generated (or loaded) data reshaped to the model input shape.
Datasets make_datasets(const ExperimentConfig& cfg);

// Fills model.input_shape from the data when the config left it empty.
ExperimentConfig resolve_input_shape(ExperimentConfig cfg, const Datasets& data);

/// File names inside a run directory.
namespace artifacts {
inline constexpr const char* kBaseline = "baseline.spqf";
inline constexpr const char* kPruned = "pruned.spqf";
inline constexpr const char* kQuantized = "quantized.spqf";
inline constexpr const char* kTrainLog = "train_log.csv";
inline constexpr const char* kPruneCsv = "prune_trajectory.csv";
inline constexpr const char* kQuantCsv = "quant_steps.csv";
inline constexpr const char* kSummaryCsv = "summary.csv";
inline constexpr const char* kCostJson = "cost_report.json";
inline constexpr const char* kVerifyJson = "verify.json";
inline constexpr const char* kConfigJson = "config.json";
}  // namespace artifacts

// Each stage reads its input container (if any) and writes its outputs into
// `out_dir`. Running them in sequence is exactly what run_pipeline does.
void stage_train(const ExperimentConfig& cfg, const Datasets& data,
                 const std::filesystem::path& out_dir);
void stage_prune(const ExperimentConfig& cfg, const Datasets& data,
                 const std::filesystem::path& model_in,
                 const std::filesystem::path& out_dir);
void stage_quantize(const ExperimentConfig& cfg, const Datasets& data,
                    const std::filesystem::path& model_in,
                    const std::filesystem::path& out_dir);

struct SummaryRow {
  std::string stage;
  double eval_metric = 0.0;
  CostReport cost;
  double memory_ratio = 0.0;  // compressed / compressed baseline
};

/// Cost reports, verification of the shift-only forward pass, and the
/// per-stage summary table for whatever stage models exist in `run_dir`.
std::vector<SummaryRow> summarize(const ExperimentConfig& cfg,
                                  const Datasets& data,
                                  const std::filesystem::path& run_dir);

/// train -> prune -> quantize -> compile + verify -> summary. A failing
/// stage is reported by name; artifacts of earlier stages stay on disk.
std::vector<SummaryRow> run_pipeline(const ExperimentConfig& cfg,
                                     const std::filesystem::path& out_dir);

// Table-shaped text for `report`.
std::string format_report(const std::filesystem::path& run_dir);

// Joins two runs' quantization steps into one CSV, keyed by fraction.
std::string compare_runs(const std::filesystem::path& a,
                         const std::filesystem::path& b);

struct SweepRun {
  PruneCriterion criterion;
  double threshold;
  PruneResult result;
};

/// Prunes copies of `base` under each criterion/threshold pair.
std::vector<SweepRun> criterion_sweep(const ExperimentConfig& cfg,
                                      const Datasets& data, const Model& base,
                                      const std::vector<double>& taylor_thresholds,
                                      const std::vector<double>& abs_thresholds);
// Header: criterion,threshold,epoch,sparsity,train_loss,eval_metric
std::string sweep_csv(const std::vector<SweepRun>& runs);

}  // namespace spq

#endif  // SPQ_EXPERIMENT_HPP_
