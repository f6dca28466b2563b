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

#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "spq/error.hpp"
#include "spq/inference.hpp"
#include "spq/kernels.hpp"

using namespace spq;

TEST_CASE("compile lists only nonzero weights") {
  Model zero;
  zero.layers.push_back(make_dense(2, 2, {0, 0, 0, 0}, {0, 0}));
  zero.layers[0].weight.grid = Pow2Grid::from_max_exp(5, 0);
  CHECK(compile(zero).term_count() == 0);

  Model m;
  m.layers.push_back(make_dense(2, 1, {0.5, 0.0}, {0.0}));
  m.layers[0].weight.grid = Pow2Grid::from_max_exp(5, -1);
  const CompiledModel c = compile(m);
  REQUIRE(c.layers[0].units[0].size() == 1);
  const ShiftTerm t = c.layers[0].units[0][0];
  CHECK(t.input == 0);
  CHECK(t.sign == 1);
  CHECK(t.exponent == -1);
}

TEST_CASE("compile rejects weights off the grid") {
  Model m;
  m.layers.push_back(make_relu());
  m.layers.push_back(make_dense(2, 2, {0.5, 0.3, 0.0, 0.25}, {0, 0}));
  m.layers[1].weight.grid = Pow2Grid::from_max_exp(5, 0);
  try {
    compile(m);
    FAIL("expected an error");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("layer 1") != std::string::npos);
    CHECK(msg.find("index 1") != std::string::npos);
  }
}

TEST_CASE("exact power-of-two scaling") {
  Model m;
  m.layers.push_back(make_dense(1, 1, {0.125}, {0.0}));
  m.layers[0].weight.grid = Pow2Grid::from_max_exp(5, -3);
  CHECK(forward_shift(compile(m), Tensor({1, 1}, {5.0}))[0] == 0.625);
}

TEST_CASE("zero input gives the bias") {
  std::mt19937_64 rng(4);
  Model m = build_model({{6}, {{LayerKind::Dense, 5, 0}, {LayerKind::ReLU, 0, 0},
                               {LayerKind::Dense, 3, 0}}}, 4);
  for (auto& l : m.layers)
    if (l.has_weights()) l.bias.value = test::random_tensor(l.bias.value.shape(), rng);
  test::quantize_all(m, 5);
  const Tensor x({2, 6});
  CHECK(forward_shift(compile(m), x) == evaluate(m, x));
}

TEST_CASE("shift inference equals the reference forward pass") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 15; ++trial) {
    const ModelSpec spec = test::random_spec(rng, 400);
    Model m = build_model(spec, rng());
    test::random_gates(m, rng, 0.3);
    for (auto& l : m.layers)
      if (l.has_weights()) {
        l.weight.gate[0] = 1;
        l.bias.value = test::random_tensor(l.bias.value.shape(), rng);
      }
    test::quantize_all(m, 3 + static_cast<int>(rng() % 5));
    const CompiledModel c = compile(m);
    const Tensor x = test::random_tensor(test::batched(20, spec.input_shape), rng, -4, 4);
    const Tensor ref = evaluate(m, x);
    std::uint64_t ops = 0;
    CHECK(forward_shift(c, x, kernels::Backend::Serial, &ops) == ref);
    CHECK(forward_shift(c, x, kernels::Backend::Parallel) == ref);
    CHECK(ops == 20 * c.shift_ops(spec.input_shape));
    CHECK(c.term_count() == m.effective_nonzero());
  }
}

TEST_CASE("overflow in scaling is reported") {
  Model m;
  m.layers.push_back(make_dense(1, 1, {2.0}, {0.0}));
  m.layers[0].weight.grid = Pow2Grid::from_max_exp(5, 1);
  CHECK_THROWS_AS(forward_shift(compile(m), Tensor({1, 1}, {1.7e308})), NumericError);
  CHECK_THROWS_AS(forward_shift(compile(m), Tensor({1, 1}, {std::nan("")})), NumericError);
}

TEST_CASE("input shape is checked") {
  Model m;
  m.layers.push_back(make_dense(2, 1, {0.5, 0.5}, {0.0}));
  m.layers[0].weight.grid = Pow2Grid::from_max_exp(5, -1);
  CHECK_THROWS_AS(forward_shift(compile(m), Tensor({1, 3})), ShapeError);
}
