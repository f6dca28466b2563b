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

#include "spq/inference.hpp"

#include <atomic>
#include <cfloat>
#include <cmath>

#include "spq/error.hpp"

namespace spq {

std::size_t CompiledLayer::term_count() const {
  std::size_t n = 0;
  for (const auto& u : units) n += u.size();
  return n;
}

std::size_t CompiledModel::term_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.term_count();
  return n;
}

std::uint64_t CompiledModel::shift_ops(const Shape& sample_shape) const {
  std::uint64_t ops = 0;
  Shape cur = sample_shape;
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::Dense:
        ops += l.term_count();
        cur = {l.out};
        break;
      case LayerKind::Conv2d: {
        if (cur.size() != 3 || cur[1] < l.kernel || cur[2] < l.kernel)
          throw ShapeError("shift_ops: conv2d cannot take " + shape_str(cur));
        const std::size_t oh = cur[1] - l.kernel + 1, ow = cur[2] - l.kernel + 1;
        ops += static_cast<std::uint64_t>(l.term_count()) * oh * ow;
        cur = {l.out, oh, ow};
        break;
      }
      case LayerKind::ReLU:
        break;
    }
  }
  return ops;
}

CompiledModel compile(const Model& model) {
  CompiledModel cm;
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    const Layer& l = model.layers[li];
    CompiledLayer cl;
    cl.kind = l.kind;
    cl.in = l.in;
    cl.out = l.out;
    cl.kernel = l.kernel;
    if (l.has_weights()) {
      const auto bv = l.bias.value.values();
      cl.bias.assign(bv.begin(), bv.end());
      const std::size_t per_unit = l.weight.size() / l.out;
      cl.units.resize(l.out);
      for (std::size_t i = 0; i < l.weight.size(); ++i) {
        const double w = l.weight.effective(i);
        if (w == 0.0) continue;
        int e = 0;
        const double m = std::frexp(std::fabs(w), &e);
        if (m != 0.5 || !l.weight.grid ||
            !l.weight.grid->contains_exponent(e - 1))
          throw NumericError("compile: layer " + std::to_string(li) +
                             " index " + std::to_string(i) + " (" +
                             std::to_string(w) +
                             ") is not a power of two inside the layer grid");
        cl.units[i / per_unit].push_back(
            {static_cast<std::uint32_t>(i % per_unit),
             static_cast<std::int8_t>(w < 0.0 ? -1 : 1),
             static_cast<std::int16_t>(e - 1)});
      }
    }
    cm.layers.push_back(std::move(cl));
  }
  return cm;
}

namespace {

using idx = std::int64_t;

// Exact x * sign * 2^e; flags results that left the normal range.
inline double shifted(double x, const ShiftTerm& t, std::atomic<bool>& bad) {
  const double r = std::ldexp(x, t.exponent);
  if (x != 0.0 && (!std::isfinite(r) || std::fabs(r) < DBL_MIN))
    bad.store(true, std::memory_order_relaxed);
  return t.sign < 0 ? -r : r;
}

Tensor dense_shift(const CompiledLayer& l, const Tensor& x, bool parallel,
                   std::atomic<bool>& bad) {
  const std::size_t batch = x.dim(0);
  if (x.numel() / batch != l.in)
    throw ShapeError("forward_shift: dense layer expects " +
                     std::to_string(l.in) + " features, got " +
                     shape_str(x.shape()));
  Tensor y({batch, l.out});
  const idx nb = static_cast<idx>(batch), no = static_cast<idx>(l.out);
#pragma omp parallel for collapse(2) schedule(static) if (parallel)
  for (idx n = 0; n < nb; ++n)
    for (idx o = 0; o < no; ++o) {
      const double* xr = x.data() + n * l.in;
      double acc = l.bias[o];
      for (const ShiftTerm& t : l.units[o]) acc += shifted(xr[t.input], t, bad);
      y[n * no + o] = acc;
    }
  return y;
}

Tensor conv_shift(const CompiledLayer& l, const Tensor& x, bool parallel,
                  std::atomic<bool>& bad) {
  if (x.rank() != 4 || x.dim(1) != l.in || x.dim(2) < l.kernel ||
      x.dim(3) < l.kernel)
    throw ShapeError("forward_shift: conv2d cannot take " + shape_str(x.shape()));
  const std::size_t batch = x.dim(0), h = x.dim(2), w = x.dim(3), k = l.kernel;
  const std::size_t oh = h - k + 1, ow = w - k + 1;
  Tensor y({batch, l.out, oh, ow});
  const idx nb = static_cast<idx>(batch), no = static_cast<idx>(l.out);
#pragma omp parallel for collapse(2) schedule(static) if (parallel)
  for (idx n = 0; n < nb; ++n)
    for (idx oc = 0; oc < no; ++oc) {
      const double* xs = x.data() + n * l.in * h * w;
      double* ys = y.data() + (n * no + oc) * oh * ow;
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = l.bias[oc];
          for (const ShiftTerm& t : l.units[oc]) {
            const std::size_t ic = t.input / (k * k);
            const std::size_t ky = (t.input / k) % k, kx = t.input % k;
            acc += shifted(xs[(ic * h + oy + ky) * w + ox + kx], t, bad);
          }
          ys[oy * ow + ox] = acc;
        }
    }
  return y;
}

}  // namespace

Tensor forward_shift(const CompiledModel& model, const Tensor& input,
                     kernels::Backend backend, std::uint64_t* ops) {
  if (input.rank() < 2 || input.dim(0) == 0)
    throw ShapeError("forward_shift: input must be batched");
  if (!input.all_finite()) throw NumericError("forward_shift: non-finite input");
  const bool parallel = backend == kernels::Backend::Parallel;
  std::atomic<bool> bad{false};
  Shape sample(input.shape().begin() + 1, input.shape().end());
  const std::uint64_t per_sample = model.shift_ops(sample);
  Tensor cur = input;
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    const CompiledLayer& l = model.layers[li];
    switch (l.kind) {
      case LayerKind::Dense: cur = dense_shift(l, cur, parallel, bad); break;
      case LayerKind::Conv2d: cur = conv_shift(l, cur, parallel, bad); break;
      case LayerKind::ReLU:
        for (auto& v : cur.values()) v = v > 0.0 ? v : 0.0;
        break;
    }
    if (bad.load())
      throw NumericError("forward_shift: power-of-two scaling left the "
                         "floating-point normal range at layer " +
                         std::to_string(li));
  }
  if (ops) *ops = per_sample * input.dim(0);
  return cur;
}

}  // namespace spq
