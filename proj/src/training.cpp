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

#include "spq/training.hpp"

#include <algorithm>
#include <span>

#include "spq/error.hpp"

namespace spq {

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("train epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ConfigError("momentum must lie in [0, 1)");
  if (batch_size == 0) throw ConfigError("batch size must be > 0");
}

double train_epoch(Model& model, const Dataset& data, LossKind loss,
                   const TrainConfig& cfg, Sgd& opt, std::mt19937_64& rng,
                   const EpochHooks& hooks) {
  const std::size_t n = data.size();
  if (n == 0) throw NumericError("training on an empty dataset");
  const auto order = shuffled_indices(n, rng);
  double loss_sum = 0.0;
  std::vector<std::vector<std::uint8_t>> frozen;
  std::vector<ParamRef> refs;
  for (std::size_t start = 0; start < n; start += cfg.batch_size) {
    const std::size_t end = std::min(n, start + cfg.batch_size);
    const Batch b = data.gather(std::span(order).subspan(start, end - start));
    const Tensor pred = forward(model, b.inputs, hooks.mode);
    const double e = backward(model, loss, pred, b.targets);
    loss_sum += e * static_cast<double>(end - start);
    if (hooks.after_backward) hooks.after_backward(model);

    frozen.clear();
    refs.clear();
    for (auto& l : model.layers) {
      if (!l.has_weights()) continue;
      auto& mask = frozen.emplace_back(l.weight.size());
      for (std::size_t i = 0; i < mask.size(); ++i)
        mask[i] = (!l.weight.quant[i].is_free() ||
                   (hooks.freeze_gated && !l.weight.gate[i]))
                      ? 1
                      : 0;
    }
    std::size_t fi = 0;
    for (auto& l : model.layers) {
      if (!l.has_weights()) continue;
      refs.push_back({&l.weight.base, &frozen[fi++]});
      refs.push_back({&l.bias, nullptr});
    }
    opt.step(refs);
    if (hooks.after_step) hooks.after_step(model);
  }
  return loss_sum / static_cast<double>(n);
}

double train_baseline(Model& model, const Dataset& data, LossKind loss,
                      const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  Sgd opt(cfg.learning_rate, cfg.momentum);
  double last = 0.0;
  for (int e = 0; e < cfg.epochs; ++e)
    last = train_epoch(model, data, loss, cfg, opt, rng);
  return last;
}

double evaluate_metric(const Model& model, const Dataset& data,
                       const MetricSpec& spec) {
  return metric(spec, evaluate(model, data.inputs), data.targets);
}

}  // namespace spq
