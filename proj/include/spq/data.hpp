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

#ifndef SPQ_DATA_HPP_
#define SPQ_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spq/autodiff.hpp"
#include "spq/tensor.hpp"

namespace spq {

struct Dataset {
  Tensor inputs;   // [N, ...]
  Tensor targets;  // [N, ...]

  std::size_t size() const { return inputs.rank() ? inputs.dim(0) : 0; }
  Batch gather(std::span<const std::size_t> rows) const;
  Batch all() const { return {inputs, targets}; }
  // Reshape inputs to [N, sample_shape...].
  void reshape_inputs(const Shape& sample_shape);
};

enum class Task { ToyDisparity, ToyClassify, CsvRegression };

Task parse_task(const std::string& name);
std::string task_name(Task task);

struct DataParams {
  // toy_disparity: signal length and largest integer shift.
  std::size_t length = 16;
  std::size_t max_shift = 3;
  // toy_classify: blob count, feature dimension, per-axis stddev, and the
  // seed that places the blob centers (shared by train and eval splits).
  std::size_t classes = 4;
  std::size_t features = 8;
  double blob_stddev = 0.6;
  std::uint64_t blob_seed = 0;
  // csv_regression
  std::filesystem::path csv_path;
};

/// toy_disparity: a left signal and a right signal built by sampling the
/// left one at a per-position integer offset (circularly); the input is
/// [left | right] and the target is the offset map. Offsets are piecewise
/// constant over one or two segments.
/// toy_classify: Gaussian blobs with one-hot targets.
/// csv_regression: rows of the CSV at params.csv_path (n is ignored).
/// Deterministic per (task, seed, n, params).
Dataset gen_data(Task task, std::uint64_t seed, std::size_t n,
                 const DataParams& params = {});

/// CSV with a header row; columns named x* are inputs, y* targets.
void save_csv(const Dataset& data, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);

// Mini-batch order for one epoch.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng);

}  // namespace spq

#endif  // SPQ_DATA_HPP_
