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

#ifndef SPQ_PRUNING_HPP_
#define SPQ_PRUNING_HPP_

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "spq/autodiff.hpp"
#include "spq/data.hpp"
#include "spq/metrics.hpp"
#include "spq/model.hpp"
#include "spq/training.hpp"

namespace spq {

enum class PruneStrategy { SemiSoft, Hard };
enum class PruneCriterion { TaylorScore, AbsValue };
// When the threshold is applied: after every mini-batch, or once per epoch
// with the gradient of the epoch's last batch.
enum class ScoreGranularity { PerBatch, PerEpoch };

struct PruneConfig {
  double threshold = 1e-11;
  PruneStrategy strategy = PruneStrategy::Hard;
  int max_epochs = 50;
  std::optional<double> target_sparsity;
  double convergence_delta = 1e-4;
  PruneCriterion criterion = PruneCriterion::TaylorScore;
  ScoreGranularity granularity = ScoreGranularity::PerBatch;

  void validate() const;
};

/// First-order Taylor importance (g * w)^2.
inline double taylor_score(double weight_value, double weight_grad) {
  const double p = weight_grad * weight_value;
  return p * p;
}

inline double abs_score(double weight_value) {
  return weight_value < 0.0 ? -weight_value : weight_value;
}

/// Per-weight importance from the current value and gradient. With
/// `gated` the value is taken as value ⊙ gate.
Tensor compute_scores(const MaskedParameter& param, PruneCriterion criterion,
                      bool gated);

/// Closes every open gate whose score is strictly below `threshold`.
/// Returns the number of gates closed by this call.
std::size_t apply_threshold(MaskedParameter& param, const Tensor& scores,
                            double threshold);

/// Fraction of prunable weights whose test-time value is zero.
double sparsity(const Model& model);

struct EpochStats {
  int epoch = 0;
  double sparsity = 0.0;
  double train_loss = 0.0;
  double eval_metric = 0.0;
};

/// One fine-tuning epoch with thresholding. SemiSoft trains the dense
/// network (gates read as 1) and updates every weight; Hard trains the
/// gated network and only the surviving weights.
EpochStats prune_epoch(Model& model, const Dataset& data, LossKind loss,
                       const PruneConfig& config, const TrainConfig& train,
                       Sgd& opt, std::mt19937_64& rng);

struct PruneResult {
  double initial_sparsity = 0.0;
  double initial_metric = 0.0;
  std::vector<EpochStats> trajectory;
};

/// Repeats prune_epoch until max_epochs, until target_sparsity is met, or
/// until the per-epoch sparsity gain stays below convergence_delta for
/// three consecutive epochs.
PruneResult prune_loop(Model& model, const Dataset& train_data,
                       const Dataset& eval_data, LossKind loss,
                       const MetricSpec& metric_spec, const PruneConfig& config,
                       const TrainConfig& train, std::uint64_t seed);

// Header: epoch,sparsity,train_loss,eval_metric
void write_prune_csv(std::ostream& out, const PruneResult& result);

}  // namespace spq

#endif  // SPQ_PRUNING_HPP_
