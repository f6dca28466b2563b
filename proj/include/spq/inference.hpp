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

#ifndef SPQ_INFERENCE_HPP_
#define SPQ_INFERENCE_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "spq/kernels.hpp"
#include "spq/model.hpp"

namespace spq {

// One nonzero weight ±2^exponent reading input element `input`.
struct ShiftTerm {
  std::uint32_t input = 0;
  std::int8_t sign = 1;
  std::int16_t exponent = 0;

  friend bool operator==(const ShiftTerm&, const ShiftTerm&) = default;
};

/// Zero-skipping layer. Dense: one term list per output feature, indexed
/// by input feature. Conv2d: one list per output channel, indexed by the
/// flattened (in_channel, ky, kx) kernel position.
struct CompiledLayer {
  LayerKind kind = LayerKind::ReLU;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 0;
  std::vector<std::vector<ShiftTerm>> units;
  std::vector<double> bias;

  std::size_t term_count() const;
};

struct CompiledModel {
  std::vector<CompiledLayer> layers;

  std::size_t term_count() const;
  // Shift-accumulate operations for one sample of the given shape.
  std::uint64_t shift_ops(const Shape& sample_shape) const;
};

/// Requires every effective weight to be zero or ±2^n within its layer
/// grid; otherwise throws NumericError naming the layer and flat index.
CompiledModel compile(const Model& model);

/// Forward pass that scales inputs by exact powers of two (std::ldexp)
/// instead of multiplying. Matches evaluate() on the source model exactly.
/// Throws NumericError if any scaling overflows or underflows.
/// `ops`, when given, receives the number of shift-accumulates executed.
Tensor forward_shift(const CompiledModel& model, const Tensor& input,
                     kernels::Backend backend = kernels::default_backend(),
                     std::uint64_t* ops = nullptr);

}  // namespace spq

#endif  // SPQ_INFERENCE_HPP_
