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

#ifndef SPQ_MODEL_HPP_
#define SPQ_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spq/pow2_grid.hpp"
#include "spq/tensor.hpp"

namespace spq {

/// Trainable tensor with its gradient buffer.
struct Parameter {
  Parameter() = default;
  explicit Parameter(Tensor v);

  Tensor value;
  Tensor grad;
  std::uint64_t id = 0;

  void zero_grad() { grad.fill(0.0); }
};

struct QuantState {
  enum class Kind : std::uint8_t { Free, Quantized, QuantizedZero };
  Kind kind = Kind::Free;
  int exponent = 0;  // meaningful for Quantized only

  bool is_free() const { return kind == Kind::Free; }
  friend bool operator==(const QuantState&, const QuantState&) = default;
};

/// Prunable weight tensor: raw values, a binary gate per weight, and the
/// per-weight quantization state. The weight seen at test time is
/// value ⊙ gate.
struct MaskedParameter {
  MaskedParameter() = default;
  explicit MaskedParameter(Tensor v);

  Parameter base;
  std::vector<std::uint8_t> gate;
  std::vector<QuantState> quant;
  std::optional<Pow2Grid> grid;
  double scheduled_fraction = 0.0;  // last cumulative fraction partitioned

  std::size_t size() const { return gate.size(); }
  bool active(std::size_t i) const { return gate[i] != 0; }
  double effective(std::size_t i) const {
    return gate[i] ? base.value[i] : 0.0;
  }
  // Weights no optimizer may touch: gated off or already quantized.
  std::vector<std::uint8_t> frozen_mask() const;
  std::size_t active_count() const;
  std::size_t effective_nonzero() const;
  std::size_t quantized_count() const;  // gated-on and not Free
};

enum class LayerKind : std::uint8_t { Dense = 0, Conv2d = 1, ReLU = 2 };

std::string layer_kind_name(LayerKind kind);

struct Layer {
  LayerKind kind = LayerKind::ReLU;
  // Dense: in/out features. Conv2d: in/out channels and square kernel size.
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 0;
  MaskedParameter weight;
  Parameter bias;

  bool has_weights() const { return kind != LayerKind::ReLU; }
  Shape weight_shape() const;
};

struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  std::size_t out = 0;
  std::size_t kernel = 0;
};

/// Per-sample input shape plus layer list. Dense layers flatten whatever
/// they receive; Conv2d expects [channels, height, width].
struct ModelSpec {
  Shape input_shape;
  std::vector<LayerSpec> layers;
};

class Model {
 public:
  Model() = default;

  std::vector<Layer> layers;

  // Activation tape from the last recording forward pass: tape[0] is the
  // input, tape[i+1] the output of layer i.
  std::vector<Tensor> tape;
  bool tape_gated = true;

  std::size_t prunable_count() const;
  std::size_t effective_nonzero() const;

  // Copy without the activation tape.
  Model clone() const;
};

// Output shape (per sample) of every layer, checked against the layer list.
std::vector<Shape> infer_shapes(const Model& model, const Shape& input_shape);

// Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases.
Model build_model(const ModelSpec& spec, std::uint64_t seed);

// Dense layer from explicit values; weight is [out, in] row-major.
Layer make_dense(std::size_t in, std::size_t out, std::vector<double> weights,
                 std::vector<double> bias);
Layer make_conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                  std::vector<double> weights, std::vector<double> bias);
Layer make_relu();

}  // namespace spq

#endif  // SPQ_MODEL_HPP_
