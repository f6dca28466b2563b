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

#include "spq/pruning.hpp"

#include <cmath>
#include <cstdio>

#include "spq/error.hpp"

namespace spq {

void PruneConfig::validate() const {
  if (!(threshold >= 0.0)) throw ConfigError("prune threshold must be >= 0");
  if (max_epochs <= 0) throw ConfigError("prune max_epochs must be > 0");
  if (target_sparsity && !(*target_sparsity >= 0.0 && *target_sparsity <= 1.0))
    throw ConfigError("target sparsity must lie in [0, 1]");
  if (!(convergence_delta >= 0.0))
    throw ConfigError("convergence delta must be >= 0");
}

Tensor compute_scores(const MaskedParameter& param, PruneCriterion criterion,
                      bool gated) {
  Tensor scores(param.base.value.shape());
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double w = gated ? param.effective(i) : param.base.value[i];
    scores[i] = criterion == PruneCriterion::TaylorScore
                    ? taylor_score(w, param.base.grad[i])
                    : abs_score(w);
  }
  return scores;
}

std::size_t apply_threshold(MaskedParameter& param, const Tensor& scores,
                            double threshold) {
  if (!(threshold >= 0.0)) throw ConfigError("prune threshold must be >= 0");
  if (scores.numel() != param.size())
    throw ShapeError("scores " + shape_str(scores.shape()) +
                     " do not match gate count " + std::to_string(param.size()));
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < param.size(); ++i) {
    if (param.gate[i] && scores[i] < threshold) {
      param.gate[i] = 0;
      ++flipped;
    }
  }
  return flipped;
}

double sparsity(const Model& model) {
  const std::size_t total = model.prunable_count();
  if (total == 0) throw ShapeError("model has no prunable weights");
  return 1.0 - static_cast<double>(model.effective_nonzero()) /
                   static_cast<double>(total);
}

namespace {

void threshold_model(Model& model, const PruneConfig& config) {
  const bool gated = config.strategy == PruneStrategy::Hard;
  for (auto& l : model.layers) {
    if (!l.has_weights()) continue;
    Tensor scores = compute_scores(l.weight, config.criterion, gated);
    // Quantized weights are never removed.
    for (std::size_t i = 0; i < l.weight.size(); ++i)
      if (!l.weight.quant[i].is_free()) scores[i] = INFINITY;
    apply_threshold(l.weight, scores, config.threshold);
    if (gated) {
      auto g = l.weight.base.grad.values();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!l.weight.gate[i]) g[i] = 0.0;
    }
  }
}

}  // namespace

EpochStats prune_epoch(Model& model, const Dataset& data, LossKind loss,
                       const PruneConfig& config, const TrainConfig& train,
                       Sgd& opt, std::mt19937_64& rng) {
  EpochHooks hooks;
  const bool hard = config.strategy == PruneStrategy::Hard;
  hooks.mode = hard ? GateMode::Apply : GateMode::Ignore;
  hooks.freeze_gated = hard;
  if (config.granularity == ScoreGranularity::PerBatch)
    hooks.after_backward = [&config](Model& m) { threshold_model(m, config); };
  EpochStats s;
  s.train_loss = train_epoch(model, data, loss, train, opt, rng, hooks);
  if (config.granularity == ScoreGranularity::PerEpoch) {
    threshold_model(model, config);
  }
  s.sparsity = sparsity(model);
  return s;
}

PruneResult prune_loop(Model& model, const Dataset& train_data,
                       const Dataset& eval_data, LossKind loss,
                       const MetricSpec& metric_spec, const PruneConfig& config,
                       const TrainConfig& train, std::uint64_t seed) {
  config.validate();
  train.validate();
  std::mt19937_64 rng(seed);
  Sgd opt(train.learning_rate, train.momentum);
  PruneResult r;
  r.initial_sparsity = sparsity(model);
  r.initial_metric = evaluate_metric(model, eval_data, metric_spec);
  double prev = r.initial_sparsity;
  int flat_epochs = 0;
  for (int e = 1; e <= config.max_epochs; ++e) {
    EpochStats s = prune_epoch(model, train_data, loss, config, train, opt, rng);
    s.epoch = e;
    s.eval_metric = evaluate_metric(model, eval_data, metric_spec);
    r.trajectory.push_back(s);
    if (config.target_sparsity && s.sparsity >= *config.target_sparsity) break;
    flat_epochs = (s.sparsity - prev < config.convergence_delta) ? flat_epochs + 1 : 0;
    if (flat_epochs >= 3) break;
    prev = s.sparsity;
  }
  return r;
}

void write_prune_csv(std::ostream& out, const PruneResult& result) {
  out << "epoch,sparsity,train_loss,eval_metric\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "0,%.6f,,%.4f\n", result.initial_sparsity,
                result.initial_metric);
  out << buf;
  for (const auto& s : result.trajectory) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.9g,%.4f\n", s.epoch, s.sparsity,
                  s.train_loss, s.eval_metric);
    out << buf;
  }
}

}  // namespace spq
