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

#ifndef SPQ_TESTS_HELPERS_HPP_
#define SPQ_TESTS_HELPERS_HPP_

#include <algorithm>
#include <cmath>
#include <random>

#include "spq/autodiff.hpp"
#include "spq/model.hpp"
#include "spq/quantization.hpp"
#include "spq/tensor.hpp"

namespace spq::test {

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(shape);
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = u(rng);
  return t;
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Small random network: either an MLP or a conv stack ending in a dense
// layer. Returns the spec so callers know the input shape.
inline ModelSpec random_spec(std::mt19937_64& rng, std::size_t max_weights = 500) {
  for (;;) {
    ModelSpec s;
    if (rng() % 2 == 0) {
      s.input_shape = {pick(rng, 1, 8)};
      const std::size_t depth = pick(rng, 1, 3);
      for (std::size_t d = 0; d < depth; ++d) {
        s.layers.push_back({LayerKind::Dense, pick(rng, 1, 10), 0});
        if (d + 1 < depth) s.layers.push_back({LayerKind::ReLU, 0, 0});
      }
    } else {
      const std::size_t k = pick(rng, 1, 3);
      s.input_shape = {pick(rng, 1, 2), pick(rng, k, 6), pick(rng, k, 6)};
      s.layers.push_back({LayerKind::Conv2d, pick(rng, 1, 3), k});
      s.layers.push_back({LayerKind::ReLU, 0, 0});
      s.layers.push_back({LayerKind::Dense, pick(rng, 1, 4), 0});
    }
    std::size_t in = shape_numel(s.input_shape), total = 0;
    std::size_t ch = s.input_shape.size() == 3 ? s.input_shape[0] : 0;
    std::size_t h = ch ? s.input_shape[1] : 0, w = ch ? s.input_shape[2] : 0;
    for (const auto& l : s.layers) {
      if (l.kind == LayerKind::Dense) {
        total += in * l.out;
        in = l.out;
      } else if (l.kind == LayerKind::Conv2d) {
        total += ch * l.out * l.kernel * l.kernel;
        h = h - l.kernel + 1;
        w = w - l.kernel + 1;
        in = l.out * h * w;
      }
    }
    if (total <= max_weights) return s;
  }
}

// Prepend a batch dimension to a per-sample shape.
inline Shape batched(std::size_t n, const Shape& sample) {
  Shape s{n};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

// Randomly close a fraction of gates in every weighted layer.
inline void random_gates(Model& m, std::mt19937_64& rng, double closed) {
  std::bernoulli_distribution b(closed);
  for (auto& l : m.layers)
    if (l.has_weights())
      for (auto& g : l.weight.gate)
        if (b(rng)) g = 0;
}

// Nonzero biases keep ReLU inputs off the kink at exactly zero, where
// finite differences are meaningless.
inline void random_biases(Model& m, std::mt19937_64& rng) {
  for (auto& l : m.layers)
    if (l.has_weights()) l.bias.value = random_tensor(l.bias.value.shape(), rng);
}

// True if any ReLU input lies within `margin` of zero under either gate
// mode; a central difference straddling the kink would be meaningless.
inline bool near_relu_kink(Model& m, const Tensor& x, double margin = 1e-3) {
  bool near = false;
  for (GateMode mode : {GateMode::Apply, GateMode::Ignore}) {
    forward(m, x, mode);
    for (std::size_t li = 0; li < m.layers.size(); ++li)
      if (m.layers[li].kind == LayerKind::ReLU)
        for (double v : m.tape[li].values()) near = near || std::fabs(v) < margin;
  }
  m.tape.clear();
  return near;
}

// Snap every open weight onto its layer grid in one shot.
inline void quantize_all(Model& m, int bits) {
  for (auto& l : m.layers) {
    if (!l.has_weights()) continue;
    auto& w = l.weight;
    if (!w.grid) w.grid = build_grid(w.base.value, w.gate, bits);
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!w.gate[i]) continue;
      const double v = snap(w.base.value[i], *w.grid);
      w.base.value[i] = v;
      if (v == 0.0) {
        w.quant[i] = {QuantState::Kind::QuantizedZero, 0};
      } else {
        int e = 0;
        std::frexp(v, &e);
        w.quant[i] = {QuantState::Kind::Quantized, e - 1};
      }
    }
    w.scheduled_fraction = 1.0;
  }
}

}  // namespace spq::test

#endif  // SPQ_TESTS_HELPERS_HPP_
