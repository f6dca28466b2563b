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
#include "spq/autodiff.hpp"
#include "spq/error.hpp"

using namespace spq;

namespace {

Model single_weight(double w) {
  Model m;
  m.layers.push_back(make_dense(1, 1, {w}, {0.0}));
  return m;
}

double max_rel_error(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double diff = std::fabs(a[i] - b[i]);
    if (diff <= 1e-8) continue;
    worst = std::max(worst, diff / std::max(std::fabs(a[i]), std::fabs(b[i])));
  }
  return worst;
}

}  // namespace

TEST_CASE("relu clamps negatives") {
  Model m;
  m.layers.push_back(make_relu());
  const Tensor y = evaluate(m, Tensor({1, 3}, {-1.0, 0.0, 2.0}));
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == 2.0);
}

TEST_CASE("single weight loss and gradient") {
  Model m = single_weight(2.0);
  const Tensor x({1, 1}, {1.0}), t({1, 1}, {0.0});
  const Tensor y = forward(m, x);
  CHECK(backward(m, LossKind::MSE, y, t) == 4.0);
  // dE/dw = 2 (wx - y) x = 4.
  CHECK(m.layers[0].weight.base.grad[0] == 4.0);

  const auto fd = finite_diff_grad(m, LossKind::MSE, {x, t}, GateMode::Apply);
  CHECK(std::fabs(fd[0][0] - 4.0) < 1e-6);
}

TEST_CASE("perfect prediction gives zero loss and gradients") {
  Model m = single_weight(0.5);
  const Tensor x({2, 1}, {1.0, -2.0});
  const Tensor y = forward(m, x);
  CHECK(backward(m, LossKind::MSE, y, y) == 0.0);
  for (Parameter* p : parameters(m))
    for (double g : p->grad.values()) CHECK(g == 0.0);
}

TEST_CASE("constant model has zero finite-difference gradient") {
  Model m = single_weight(0.0);
  const Tensor x({1, 1}, {0.0}), t({1, 1}, {1.0});
  m.layers[0].bias.value[0] = 3.0;
  const auto fd = finite_diff_grad(m, LossKind::MSE, {x, t}, GateMode::Apply);
  CHECK(fd[0][0] == 0.0);
}

TEST_CASE("backward without a recorded forward pass is an error") {
  Model m = single_weight(1.0);
  const Tensor t({1, 1}, {0.0});
  CHECK_THROWS_AS(backward(m, LossKind::MSE, t, t), Error);
}

TEST_CASE("shape mismatch in loss") {
  CHECK_THROWS_AS(loss_value(LossKind::MSE, Tensor({1, 2}), Tensor({1, 3})), ShapeError);
}

TEST_CASE("non-finite forward output raises") {
  Model m = single_weight(1e308);
  CHECK_THROWS_AS(forward(m, Tensor({1, 1}, {1e10})), NumericError);
}

TEST_CASE("cross entropy gradient matches finite differences") {
  std::mt19937_64 rng(7);
  Model m = build_model({{4}, {{LayerKind::Dense, 5, 0}, {LayerKind::ReLU, 0, 0},
                               {LayerKind::Dense, 3, 0}}}, 9);
  const Tensor x = test::random_tensor({6, 4}, rng);
  Tensor t({6, 3});
  for (std::size_t n = 0; n < 6; ++n) t[n * 3 + n % 3] = 1.0;
  const Tensor y = forward(m, x);
  backward(m, LossKind::SoftmaxCrossEntropy, y, t);
  const auto fd = finite_diff_grad(m, LossKind::SoftmaxCrossEntropy, {x, t}, GateMode::Apply);
  const auto ps = parameters(m);
  for (std::size_t p = 0; p < ps.size(); ++p) CHECK(max_rel_error(ps[p]->grad, fd[p]) < 1e-4);
}

TEST_CASE("gradients match finite differences on random models") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const ModelSpec spec = test::random_spec(rng);
    Model m = build_model(spec, rng());
    test::random_gates(m, rng, 0.2);
    test::random_biases(m, rng);
    const std::size_t n = test::pick(rng, 1, 4);
    Tensor x = test::random_tensor(test::batched(n, spec.input_shape), rng);
    while (test::near_relu_kink(m, x))
      x = test::random_tensor(test::batched(n, spec.input_shape), rng);
    const Tensor probe = evaluate(m, x);
    const Tensor t = test::random_tensor(probe.shape(), rng);
    for (GateMode mode : {GateMode::Apply, GateMode::Ignore}) {
      const Tensor y = forward(m, x, mode);
      backward(m, LossKind::MSE, y, t);
      const auto fd = finite_diff_grad(m, LossKind::MSE, {x, t}, mode);
      const auto ps = parameters(m);
      for (std::size_t p = 0; p < ps.size(); ++p) CHECK(max_rel_error(ps[p]->grad, fd[p]) < 1e-4);
    }
  }
}

TEST_CASE("sgd plain step") {
  Parameter p(Tensor({1}, {1.0}));
  p.grad[0] = 1.0;
  Sgd opt(0.1, 0.0);
  const ParamRef ref{&p, nullptr};
  opt.step({&ref, 1});
  CHECK(p.value[0] == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("sgd zero gradient leaves weights alone") {
  Parameter p(Tensor({2}, {1.0, -3.0}));
  Sgd opt(0.1, 0.9);
  const ParamRef ref{&p, nullptr};
  opt.step({&ref, 1});
  CHECK(p.value[0] == 1.0);
  CHECK(p.value[1] == -3.0);
}

TEST_CASE("sgd momentum accumulates") {
  Parameter p(Tensor({1}, {0.0}));
  Sgd opt(0.1, 0.9);
  const ParamRef ref{&p, nullptr};
  p.grad[0] = 1.0;
  opt.step({&ref, 1});
  CHECK(p.value[0] == doctest::Approx(-0.1).epsilon(1e-12));
  opt.step({&ref, 1});
  CHECK(p.value[0] == doctest::Approx(-0.29).epsilon(1e-12));
}

TEST_CASE("sgd leaves frozen entries untouched") {
  Parameter p(Tensor({2}, {0.5, 0.5}));
  p.grad.fill(1.0);
  const std::vector<std::uint8_t> frozen{1, 0};
  Sgd opt(0.1, 0.9);
  const ParamRef ref{&p, &frozen};
  opt.step({&ref, 1});
  opt.step({&ref, 1});
  CHECK(p.value[0] == 0.5);
  CHECK(p.value[1] < 0.5);
}

TEST_CASE("sgd rejects bad settings and non-finite gradients") {
  CHECK_THROWS_AS(Sgd(0.0, 0.9), ConfigError);
  CHECK_THROWS_AS(Sgd(0.1, 1.0), ConfigError);
  Parameter a(Tensor({1}, {1.0})), b(Tensor({1}, {2.0}));
  a.grad[0] = 1.0;
  b.grad[0] = std::nan("");
  const ParamRef refs[] = {{&a, nullptr}, {&b, nullptr}};
  Sgd opt(0.1, 0.0);
  CHECK_THROWS_AS(opt.step(refs), NumericError);
  CHECK(a.value[0] == 1.0);
}
