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

#ifndef SPQ_COSTMODEL_HPP_
#define SPQ_COSTMODEL_HPP_

#include <cstdint>
#include <string>

#include "json.hpp"
#include "spq/model.hpp"

namespace spq {

struct CostParams {
  // A 16-bit MAC decomposes into 17 adders and 16 shifts; one shift costs
  // 2 of those 33 units.
  double shift_cost_ratio = 2.0 / 33.0;
  double bytes_per_dense_weight = 4.0;
  // Forward passes per reporting unit, e.g. frames/s for a per-frame model.
  double scale = 1.0;

  void validate() const;
};

struct CostReport {
  std::uint64_t params_total = 0;
  std::uint64_t params_nonzero = 0;
  double sparsity = 0.0;
  std::uint64_t macs_dense = 0;     // per forward pass, unpruned
  std::uint64_t ops_effective = 0;  // per forward pass, nonzero weights only
  std::uint64_t shift_ops = 0;      // ops_effective when quantized, else 0
  double hw_cost = 0.0;             // in 16-bit MAC units, times scale
  std::uint64_t memory_raw = 0;
  std::uint64_t memory_compressed = 0;
  double scale = 1.0;
  bool quantized = false;

  nlohmann::json to_json() const;
};

// Plain arithmetic on counts in any unit (raw, thousands, millions), so
// reported numbers can be checked with the same formulas as measured ones.
double sparsity_from_counts(double nonzero, double total);
double hardware_cost(double ops_effective, double scale, bool quantized,
                     double shift_cost_ratio);
double memory_ratio(double compressed, double baseline);

/// Dense: in*out. Conv2d: output positions * k^2 * in_ch * out_ch.
std::uint64_t count_dense_macs(const Model& model, const Shape& sample_shape);

/// Per-layer dense MACs scaled by that layer's nonzero-weight fraction,
/// which for unstructured sparsity is output positions * nonzero weights.
std::uint64_t count_effective_ops(const Model& model, const Shape& sample_shape);

struct MemoryReport {
  std::uint64_t raw = 0;
  std::uint64_t compressed = 0;
};

/// raw = prunable weights * 4 bytes; compressed = DEFLATE size of the
/// container (sparse_pow2 when the model is fully quantized, else dense_f32).
MemoryReport memory_report(const Model& model, const CostParams& params = {});

CostReport effective_cost(const Model& model, const Shape& sample_shape,
                          const CostParams& params, bool quantized);

}  // namespace spq

#endif  // SPQ_COSTMODEL_HPP_
