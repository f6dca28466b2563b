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

#ifndef SPQ_AUTODIFF_HPP_
#define SPQ_AUTODIFF_HPP_

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "spq/model.hpp"
#include "spq/tensor.hpp"

namespace spq {

// Apply: weights enter the graph as value ⊙ gate (test time, hard
// fine-tuning). Ignore: every gate is treated as 1 (semi-soft training).
enum class GateMode { Ignore, Apply };

enum class LossKind { MSE, SoftmaxCrossEntropy };

struct Batch {
  Tensor inputs;   // [N, ...]
  Tensor targets;  // [N, ...]
};

// Records the activations on the model's tape for a following backward().
Tensor forward(Model& model, const Tensor& input,
               GateMode mode = GateMode::Apply);

// Test-time forward: gates applied, nothing recorded.
Tensor evaluate(const Model& model, const Tensor& input);

double loss_value(LossKind kind, const Tensor& prediction,
                  const Tensor& target);

// Fills every weight and bias gradient with dE/dparam for the recorded batch
// and returns E. Consumes the tape. In GateMode::Apply the weight gradient is
// taken with respect to the raw value, so gated-off entries get 0.
double backward(Model& model, LossKind kind, const Tensor& prediction,
                const Tensor& target);

// Weight then bias of every weighted layer, in layer order.
std::vector<Parameter*> parameters(Model& model);

// Central differences (E(w+eps) - E(w-eps)) / 2eps over every entry of every
// parameter, same order as parameters(). Leaves the model unchanged.
std::vector<Tensor> finite_diff_grad(Model& model, LossKind kind,
                                     const Batch& batch, GateMode mode,
                                     double epsilon = 1e-5);

struct ParamRef {
  Parameter* param = nullptr;
  // Entries set to 1 are neither updated nor accumulate velocity.
  const std::vector<std::uint8_t>* frozen = nullptr;
};

/// SGD with heavy-ball momentum: v <- momentum * v + g; w <- w - lr * v.
class Sgd {
 public:
  Sgd(double learning_rate, double momentum);

  // Throws NumericError if any gradient is non-finite; nothing is mutated
  // in that case.
  void step(std::span<const ParamRef> params);

  double learning_rate() const { return lr_; }
  double momentum() const { return momentum_; }

 private:
  double lr_;
  double momentum_;
  std::unordered_map<std::uint64_t, std::vector<double>> velocity_;
};

}  // namespace spq

#endif  // SPQ_AUTODIFF_HPP_
