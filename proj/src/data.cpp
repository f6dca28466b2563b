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

#include "spq/data.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "spq/error.hpp"

namespace spq {

Batch Dataset::gather(std::span<const std::size_t> rows) const {
  const std::size_t n = size();
  const std::size_t in_row = inputs.numel() / n, t_row = targets.numel() / n;
  Shape in_shape = inputs.shape(), t_shape = targets.shape();
  in_shape[0] = t_shape[0] = rows.size();
  Tensor x(in_shape), y(t_shape);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t src = rows[r];
    std::copy_n(inputs.data() + src * in_row, in_row, x.data() + r * in_row);
    std::copy_n(targets.data() + src * t_row, t_row, y.data() + r * t_row);
  }
  return {std::move(x), std::move(y)};
}

void Dataset::reshape_inputs(const Shape& sample_shape) {
  Shape s{size()};
  s.insert(s.end(), sample_shape.begin(), sample_shape.end());
  inputs.reshape(std::move(s));
}

Task parse_task(const std::string& name) {
  if (name == "toy_disparity") return Task::ToyDisparity;
  if (name == "toy_classify") return Task::ToyClassify;
  if (name == "csv_regression") return Task::CsvRegression;
  throw ConfigError("unknown task '" + name + "'");
}

std::string task_name(Task task) {
  switch (task) {
    case Task::ToyDisparity: return "toy_disparity";
    case Task::ToyClassify: return "toy_classify";
    case Task::CsvRegression: return "csv_regression";
  }
  return "unknown";
}

namespace {

Dataset toy_disparity(std::uint64_t seed, std::size_t n, const DataParams& p) {
  const std::size_t len = p.length;
  if (len < 2) throw ConfigError("toy_disparity needs length >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> signal(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> shift(0, p.max_shift);
  std::uniform_int_distribution<std::size_t> cut(1, len - 1);
  std::bernoulli_distribution two_segments(0.5);

  Tensor x({n, 2 * len}), y({n, len});
  std::vector<double> left(len);
  std::vector<std::size_t> disp(len);
  for (std::size_t s = 0; s < n; ++s) {
    for (auto& v : left) v = signal(rng);
    const std::size_t d0 = shift(rng);
    std::size_t boundary = len, d1 = d0;
    if (two_segments(rng)) {
      boundary = cut(rng);
      d1 = shift(rng);
    }
    for (std::size_t i = 0; i < len; ++i) disp[i] = i < boundary ? d0 : d1;
    double* row = x.data() + s * 2 * len;
    for (std::size_t i = 0; i < len; ++i) {
      row[i] = left[i];
      row[len + i] = left[(i + disp[i]) % len];
      y[s * len + i] = static_cast<double>(disp[i]);
    }
  }
  return {std::move(x), std::move(y)};
}

Dataset toy_classify(std::uint64_t seed, std::size_t n, const DataParams& p) {
  if (p.classes < 2 || p.features == 0)
    throw ConfigError("toy_classify needs >= 2 classes and >= 1 feature");
  // Centers come from their own seed so every split shares one geometry.
  std::mt19937_64 center_rng(p.blob_seed);
  std::uniform_real_distribution<double> center(-2.0, 2.0);
  std::vector<double> centers(p.classes * p.features);
  for (auto& c : centers) c = center(center_rng);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, p.blob_stddev);
  std::uniform_int_distribution<std::size_t> label(0, p.classes - 1);
  Tensor x({n, p.features}), y({n, p.classes});
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t c = label(rng);
    for (std::size_t f = 0; f < p.features; ++f)
      x[s * p.features + f] = centers[c * p.features + f] + noise(rng);
    y[s * p.classes + c] = 1.0;
  }
  return {std::move(x), std::move(y)};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

}  // namespace

Dataset gen_data(Task task, std::uint64_t seed, std::size_t n,
                 const DataParams& params) {
  if (task == Task::CsvRegression) return load_csv(params.csv_path);
  if (n == 0) throw ConfigError("dataset size must be > 0");
  return task == Task::ToyDisparity ? toy_disparity(seed, n, params)
                                    : toy_classify(seed, n, params);
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  const std::size_t n = data.size();
  const std::size_t nx = data.inputs.numel() / n, ny = data.targets.numel() / n;
  for (std::size_t i = 0; i < nx; ++i) out << (i ? "," : "") << 'x' << i;
  for (std::size_t i = 0; i < ny; ++i) out << ",y" << i;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < nx; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", data.inputs[r * nx + i]);
      out << (i ? "," : "") << buf;
    }
    for (std::size_t i = 0; i < ny; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", data.targets[r * ny + i]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  const auto header = split_csv_line(line);
  std::vector<bool> is_input;
  for (const auto& h : header) {
    if (h.empty() || (h[0] != 'x' && h[0] != 'y'))
      throw FormatError(path.string() + ": column '" + h +
                        "' must start with x (input) or y (target)");
    is_input.push_back(h[0] == 'x');
  }
  const std::size_t nx = std::count(is_input.begin(), is_input.end(), true);
  const std::size_t ny = is_input.size() - nx;
  if (nx == 0 || ny == 0)
    throw FormatError(path.string() + ": need at least one x and one y column");
  std::vector<double> xs, ys;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw FormatError(path.string() + ": row " + std::to_string(rows + 1) +
                        " has " + std::to_string(cells.size()) + " cells");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      try {
        v = std::stod(cells[c]);
      } catch (const std::exception&) {
        throw FormatError(path.string() + ": bad number '" + cells[c] + "'");
      }
      (is_input[c] ? xs : ys).push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw FormatError(path.string() + ": no data rows");
  return {Tensor({rows, nx}, std::move(xs)), Tensor({rows, ny}, std::move(ys))};
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Fisher-Yates with our own draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng() % i;
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace spq
