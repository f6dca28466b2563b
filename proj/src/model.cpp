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

#include "spq/model.hpp"

#include <atomic>
#include <cmath>
#include <random>

#include "spq/error.hpp"

namespace spq {

namespace {
std::atomic<std::uint64_t> g_next_param_id{1};
}

Parameter::Parameter(Tensor v)
    : value(std::move(v)), grad(value.shape()), id(g_next_param_id++) {}

MaskedParameter::MaskedParameter(Tensor v)
    : base(std::move(v)),
      gate(base.value.numel(), 1),
      quant(base.value.numel()) {}

std::vector<std::uint8_t> MaskedParameter::frozen_mask() const {
  std::vector<std::uint8_t> mask(size());
  for (std::size_t i = 0; i < size(); ++i)
    mask[i] = (!gate[i] || !quant[i].is_free()) ? 1 : 0;
  return mask;
}

std::size_t MaskedParameter::active_count() const {
  std::size_t n = 0;
  for (auto g : gate) n += g;
  return n;
}

std::size_t MaskedParameter::effective_nonzero() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) n += effective(i) != 0.0;
  return n;
}

std::size_t MaskedParameter::quantized_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i)
    n += (gate[i] && !quant[i].is_free());
  return n;
}

std::string layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::ReLU: return "relu";
  }
  return "unknown";
}

Shape Layer::weight_shape() const {
  switch (kind) {
    case LayerKind::Dense: return {out, in};
    case LayerKind::Conv2d: return {out, in, kernel, kernel};
    case LayerKind::ReLU: return {};
  }
  return {};
}

std::size_t Model::prunable_count() const {
  std::size_t n = 0;
  for (const auto& l : layers)
    if (l.has_weights()) n += l.weight.size();
  return n;
}

std::size_t Model::effective_nonzero() const {
  std::size_t n = 0;
  for (const auto& l : layers)
    if (l.has_weights()) n += l.weight.effective_nonzero();
  return n;
}

Model Model::clone() const {
  Model m;
  m.layers = layers;
  return m;
}

std::vector<Shape> infer_shapes(const Model& model, const Shape& input_shape) {
  std::vector<Shape> shapes;
  Shape cur = input_shape;
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    const Layer& l = model.layers[li];
    switch (l.kind) {
      case LayerKind::Dense:
        if (shape_numel(cur) != l.in) {
          throw ShapeError("layer " + std::to_string(li) + " (dense " +
                           std::to_string(l.in) + "->" + std::to_string(l.out) +
                           ") cannot take input " + shape_str(cur));
        }
        cur = {l.out};
        break;
      case LayerKind::Conv2d:
        if (cur.size() != 3 || cur[0] != l.in || cur[1] < l.kernel ||
            cur[2] < l.kernel) {
          throw ShapeError("layer " + std::to_string(li) + " (conv2d " +
                           std::to_string(l.in) + "->" + std::to_string(l.out) +
                           " k" + std::to_string(l.kernel) +
                           ") cannot take input " + shape_str(cur));
        }
        cur = {l.out, cur[1] - l.kernel + 1, cur[2] - l.kernel + 1};
        break;
      case LayerKind::ReLU:
        break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

Layer make_dense(std::size_t in, std::size_t out, std::vector<double> weights,
                 std::vector<double> bias) {
  Layer l;
  l.kind = LayerKind::Dense;
  l.in = in;
  l.out = out;
  l.weight = MaskedParameter(Tensor({out, in}, std::move(weights)));
  l.bias = Parameter(Tensor({out}, std::move(bias)));
  return l;
}

Layer make_conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                  std::vector<double> weights, std::vector<double> bias) {
  if (kernel == 0) throw ShapeError("conv2d kernel size must be positive");
  Layer l;
  l.kind = LayerKind::Conv2d;
  l.in = in_ch;
  l.out = out_ch;
  l.kernel = kernel;
  l.weight =
      MaskedParameter(Tensor({out_ch, in_ch, kernel, kernel}, std::move(weights)));
  l.bias = Parameter(Tensor({out_ch}, std::move(bias)));
  return l;
}

Layer make_relu() { return Layer{}; }

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Model m;
  Shape cur = spec.input_shape;
  if (cur.empty() || shape_numel(cur) == 0)
    throw ShapeError("model input shape must be non-empty");
  for (const auto& ls : spec.layers) {
    switch (ls.kind) {
      case LayerKind::Dense: {
        const std::size_t in = shape_numel(cur);
        if (ls.out == 0) throw ShapeError("dense layer needs out > 0");
        const double bound = std::sqrt(6.0 / static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        std::vector<double> w(in * ls.out);
        for (auto& v : w) v = dist(rng);
        m.layers.push_back(make_dense(in, ls.out, std::move(w),
                                      std::vector<double>(ls.out, 0.0)));
        cur = {ls.out};
        break;
      }
      case LayerKind::Conv2d: {
        if (cur.size() != 3)
          throw ShapeError("conv2d needs [channels, height, width] input, got " +
                           shape_str(cur));
        if (ls.out == 0 || ls.kernel == 0 || cur[1] < ls.kernel ||
            cur[2] < ls.kernel)
          throw ShapeError("conv2d kernel " + std::to_string(ls.kernel) +
                           " does not fit input " + shape_str(cur));
        const std::size_t fan_in = cur[0] * ls.kernel * ls.kernel;
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        std::vector<double> w(ls.out * fan_in);
        for (auto& v : w) v = dist(rng);
        m.layers.push_back(make_conv2d(cur[0], ls.out, ls.kernel, std::move(w),
                                       std::vector<double>(ls.out, 0.0)));
        cur = {ls.out, cur[1] - ls.kernel + 1, cur[2] - ls.kernel + 1};
        break;
      }
      case LayerKind::ReLU:
        m.layers.push_back(make_relu());
        break;
    }
  }
  return m;
}

}  // namespace spq
