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

#include "spq/costmodel.hpp"

#include <cmath>

#include "spq/error.hpp"
#include "spq/model_io.hpp"
#include "spq/quantization.hpp"

namespace spq {

void CostParams::validate() const {
  if (!(shift_cost_ratio > 0.0 && shift_cost_ratio <= 1.0))
    throw ConfigError("shift cost ratio must lie in (0, 1]");
  if (!(bytes_per_dense_weight > 0.0))
    throw ConfigError("bytes per dense weight must be > 0");
  if (!(scale > 0.0)) throw ConfigError("cost scale must be > 0");
}

nlohmann::json CostReport::to_json() const {
  return {{"params_total", params_total},
          {"params_nonzero", params_nonzero},
          {"sparsity", sparsity},
          {"macs_dense", macs_dense},
          {"ops_effective", ops_effective},
          {"shift_ops", shift_ops},
          {"hw_cost", hw_cost},
          {"memory_raw", memory_raw},
          {"memory_compressed", memory_compressed},
          {"scale", scale},
          {"quantized", quantized}};
}

double sparsity_from_counts(double nonzero, double total) {
  if (!(total > 0.0)) throw NumericError("sparsity of an empty parameter set");
  return 1.0 - nonzero / total;
}

double hardware_cost(double ops_effective, double scale, bool quantized,
                     double shift_cost_ratio) {
  return ops_effective * scale * (quantized ? shift_cost_ratio : 1.0);
}

double memory_ratio(double compressed, double baseline) {
  if (!(baseline > 0.0)) throw NumericError("memory baseline must be > 0");
  return compressed / baseline;
}

namespace {

// Calls fn(layer, output positions per sample) for each weighted layer.
template <typename Fn>
void walk_layers(const Model& model, const Shape& sample_shape, Fn fn) {
  const auto shapes = infer_shapes(model, sample_shape);
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    const Layer& l = model.layers[li];
    if (l.kind == LayerKind::Dense) fn(l, std::uint64_t{1});
    if (l.kind == LayerKind::Conv2d)
      fn(l, static_cast<std::uint64_t>(shapes[li][1] * shapes[li][2]));
  }
}

}  // namespace

std::uint64_t count_dense_macs(const Model& model, const Shape& sample_shape) {
  std::uint64_t macs = 0;
  walk_layers(model, sample_shape, [&](const Layer& l, std::uint64_t positions) {
    macs += positions * l.weight.size();
  });
  return macs;
}

std::uint64_t count_effective_ops(const Model& model, const Shape& sample_shape) {
  std::uint64_t ops = 0;
  walk_layers(model, sample_shape, [&](const Layer& l, std::uint64_t positions) {
    ops += positions * l.weight.effective_nonzero();
  });
  return ops;
}

MemoryReport memory_report(const Model& model, const CostParams& params) {
  MemoryReport r;
  r.raw = static_cast<std::uint64_t>(
      std::llround(static_cast<double>(model.prunable_count()) *
                   params.bytes_per_dense_weight));
  const Encoding enc =
      fully_quantized(model) ? Encoding::SparsePow2 : Encoding::DenseF32;
  r.compressed = measure_compressed(encode_model(model, enc));
  return r;
}

CostReport effective_cost(const Model& model, const Shape& sample_shape,
                          const CostParams& params, bool quantized) {
  params.validate();
  CostReport r;
  r.quantized = quantized;
  r.scale = params.scale;
  r.params_total = model.prunable_count();
  r.params_nonzero = model.effective_nonzero();
  r.sparsity = r.params_total
                   ? sparsity_from_counts(static_cast<double>(r.params_nonzero),
                                          static_cast<double>(r.params_total))
                   : 0.0;
  r.macs_dense = count_dense_macs(model, sample_shape);
  r.ops_effective = count_effective_ops(model, sample_shape);
  r.shift_ops = quantized ? r.ops_effective : 0;
  r.hw_cost = hardware_cost(static_cast<double>(r.ops_effective), params.scale,
                            quantized, params.shift_cost_ratio);
  const MemoryReport mem = memory_report(model, params);
  r.memory_raw = mem.raw;
  r.memory_compressed = mem.compressed;
  return r;
}

}  // namespace spq
