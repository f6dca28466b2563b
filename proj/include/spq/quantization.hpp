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

#ifndef SPQ_QUANTIZATION_HPP_
#define SPQ_QUANTIZATION_HPP_

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "spq/autodiff.hpp"
#include "spq/data.hpp"
#include "spq/metrics.hpp"
#include "spq/model.hpp"
#include "spq/pow2_grid.hpp"
#include "spq/pruning.hpp"
#include "spq/training.hpp"

namespace spq {

enum class PartitionCriterion { Abs, Taylor, Random };

struct QuantConfig {
  int bits = 5;
  std::vector<double> schedule{0.5, 0.875, 0.95, 1.0};
  PartitionCriterion partition = PartitionCriterion::Taylor;
  int retrain_epochs = 3;
  // Taylor threshold applied to still-free weights while retraining.
  std::optional<double> interleaved_prune_threshold;

  void validate() const;
};

/// Exponent range from the largest magnitude s of value ⊙ gate:
/// max_exp = floor(log2(4s/3)), min_exp = max_exp - 2^(bits-2) + 1.
Pow2Grid build_grid(const Tensor& weights, const std::vector<std::uint8_t>& gate,
                    int bits);

/// Nearest grid candidate by absolute distance; ties go to the larger
/// magnitude. The result is exactly 0 or ±2^n.
double snap(double w, const Pow2Grid& grid);

/// Picks the highest-scoring free, gated-on weights so that the quantized
/// share of gated-on weights in this layer reaches `fraction`. Scores of
/// other entries are ignored. Ties keep the lower index. Records `fraction`
/// on the parameter; a fraction below the previous one is rejected.
std::vector<std::size_t> partition(MaskedParameter& param, const Tensor& scores,
                                   double fraction);

struct StepStats {
  std::size_t step = 0;
  double fraction = 0.0;
  std::size_t newly_quantized = 0;
  double sparsity = 0.0;
  double train_loss = 0.0;
  double eval_metric = 0.0;
};

/// Partition + snap for schedule[step_index] in every weighted layer. On
/// step 0 each layer's grid is built and kept for later steps. Taylor
/// scores come from the gradient of `calibration`.
StepStats quant_step(Model& model, const QuantConfig& config,
                     std::size_t step_index, const Batch& calibration,
                     LossKind loss, std::mt19937_64& rng);

/// Hard-style fine-tuning of the free weights; quantized and gated-off
/// weights stay frozen. Free weights are clamped to ±1.5·2^max_exp of
/// their layer grid. With interleaved_prune_threshold set, free weights
/// whose Taylor score falls below it are gated off every batch.
/// Returns the mean loss of the last epoch (0 when epochs == 0).
double retrain(Model& model, const Dataset& data, LossKind loss,
               const QuantConfig& config, const TrainConfig& train, int epochs,
               Sgd& opt, std::mt19937_64& rng);

struct QuantResult {
  double initial_sparsity = 0.0;
  double initial_metric = 0.0;
  std::vector<StepStats> steps;
  std::size_t retrain_phases = 0;
};

/// Alternates quant_step and retrain over the schedule, with no retraining
/// after the final step.
QuantResult inq_loop(Model& model, const Dataset& train_data,
                     const Dataset& eval_data, LossKind loss,
                     const MetricSpec& metric_spec, const QuantConfig& config,
                     const TrainConfig& train, std::uint64_t seed);

/// Every prunable weight is gated off or an exact member of its layer grid.
bool fully_quantized(const Model& model);

// Header: step_fraction,sparsity,eval_metric
void write_quant_csv(std::ostream& out, const QuantResult& result);

}  // namespace spq

#endif  // SPQ_QUANTIZATION_HPP_
