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

#ifndef SPQ_TRAINING_HPP_
#define SPQ_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <random>

#include "spq/autodiff.hpp"
#include "spq/data.hpp"
#include "spq/metrics.hpp"

namespace spq {

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 32;

  void validate() const;
};

struct EpochHooks {
  GateMode mode = GateMode::Apply;
  // Hard-style training: gated-off weights get neither gradient nor update.
  bool freeze_gated = true;
  // Runs between backward() and the optimizer step.
  std::function<void(Model&)> after_backward;
  // Runs after the optimizer step.
  std::function<void(Model&)> after_step;
};

/// One pass over `data` in a shuffled order drawn from `rng`. Quantized
/// weights are always frozen. Returns the sample-weighted mean batch loss.
double train_epoch(Model& model, const Dataset& data, LossKind loss,
                   const TrainConfig& cfg, Sgd& opt, std::mt19937_64& rng,
                   const EpochHooks& hooks = {});

// Plain training from scratch for cfg.epochs; returns the last epoch loss.
double train_baseline(Model& model, const Dataset& data, LossKind loss,
                      const TrainConfig& cfg, std::uint64_t seed);

double evaluate_metric(const Model& model, const Dataset& data,
                       const MetricSpec& spec);

}  // namespace spq

#endif  // SPQ_TRAINING_HPP_
