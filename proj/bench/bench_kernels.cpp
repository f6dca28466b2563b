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

// Serial reference kernels against their OpenMP counterparts, plus the
// shift-only inference path.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "spq/inference.hpp"
#include "spq/kernels.hpp"
#include "spq/model.hpp"
#include "spq/quantization.hpp"

namespace k = spq::kernels;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

template <k::Backend B>
void BM_DenseForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const k::DenseDims d{64, n, n};
  const auto x = noise(d.batch * d.in, 1), w = noise(d.in * d.out, 2), b = noise(d.out, 3);
  std::vector<double> y(d.batch * d.out);
  for (auto _ : state) {
    k::dense_forward(B, d, x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.batch * d.in * d.out));
}

template <k::Backend B>
void BM_DenseBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const k::DenseDims d{64, n, n};
  const auto x = noise(d.batch * d.in, 1), w = noise(d.in * d.out, 2),
             dy = noise(d.batch * d.out, 3);
  std::vector<double> gw(w.size()), gb(d.out), dx(x.size());
  for (auto _ : state) {
    k::dense_backward(B, d, x, w, dy, gw, gb, dx);
    benchmark::DoNotOptimize(gw.data());
  }
}

template <k::Backend B>
void BM_ConvForward(benchmark::State& state) {
  const auto hw = static_cast<std::size_t>(state.range(0));
  const k::ConvDims d{8, 4, hw, hw, 8, 3};
  const auto x = noise(d.batch * d.in_ch * hw * hw, 1),
             w = noise(d.out_ch * d.in_ch * 9, 2), b = noise(d.out_ch, 3);
  std::vector<double> y(d.batch * d.out_ch * d.out_h() * d.out_w());
  for (auto _ : state) {
    k::conv_forward(B, d, x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <k::Backend B>
void BM_ConvBackward(benchmark::State& state) {
  const auto hw = static_cast<std::size_t>(state.range(0));
  const k::ConvDims d{8, 4, hw, hw, 8, 3};
  const auto x = noise(d.batch * d.in_ch * hw * hw, 1),
             w = noise(d.out_ch * d.in_ch * 9, 2),
             dy = noise(d.batch * d.out_ch * d.out_h() * d.out_w(), 3);
  std::vector<double> gw(w.size()), gb(d.out_ch), dx(x.size());
  for (auto _ : state) {
    k::conv_backward(B, d, x, w, dy, gw, gb, dx);
    benchmark::DoNotOptimize(gw.data());
  }
}

template <k::Backend B>
void BM_ShiftForward(benchmark::State& state) {
  spq::Model m = spq::build_model(
      {{256}, {{spq::LayerKind::Dense, 256, 0}, {spq::LayerKind::ReLU, 0, 0},
               {spq::LayerKind::Dense, 16, 0}}},
      7);
  for (auto& l : m.layers) {
    if (!l.has_weights()) continue;
    auto& w = l.weight;
    w.grid = spq::build_grid(w.base.value, w.gate, 5);
    for (std::size_t i = 0; i < w.size(); ++i) w.base.value[i] = spq::snap(w.base.value[i], *w.grid);
  }
  const spq::CompiledModel c = spq::compile(m);
  const spq::Tensor x({64, 256}, noise(64 * 256, 4));
  for (auto _ : state) benchmark::DoNotOptimize(spq::forward_shift(c, x, B));
}

constexpr auto kSerial = k::Backend::Serial;
constexpr auto kOmp = k::Backend::Parallel;

}  // namespace

BENCHMARK(BM_DenseForward<kSerial>)->Arg(64)->Arg(256);
BENCHMARK(BM_DenseForward<kOmp>)->Arg(64)->Arg(256);
BENCHMARK(BM_DenseBackward<kSerial>)->Arg(64)->Arg(256);
BENCHMARK(BM_DenseBackward<kOmp>)->Arg(64)->Arg(256);
BENCHMARK(BM_ConvForward<kSerial>)->Arg(16)->Arg(32);
BENCHMARK(BM_ConvForward<kOmp>)->Arg(16)->Arg(32);
BENCHMARK(BM_ConvBackward<kSerial>)->Arg(16)->Arg(32);
BENCHMARK(BM_ConvBackward<kOmp>)->Arg(16)->Arg(32);
BENCHMARK(BM_ShiftForward<kSerial>);
BENCHMARK(BM_ShiftForward<kOmp>);

BENCHMARK_MAIN();
