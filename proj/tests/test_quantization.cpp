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
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "spq/error.hpp"
#include "spq/quantization.hpp"

using namespace spq;

namespace {

double brute_snap(double w, const Pow2Grid& g) {
  double best = 0.0, best_d = std::numeric_limits<double>::infinity();
  for (double c : g.candidates()) {
    const double d = std::fabs(w - c);
    if (d < best_d || (d == best_d && std::fabs(c) > std::fabs(best))) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

Pow2Grid grid_for(double s, int bits) {
  return build_grid(Tensor({1}, {s}), {1}, bits);
}

struct Toy {
  Dataset train, eval;
  Model model;
};

Toy toy(std::uint64_t seed) {
  DataParams p;
  p.length = 4;
  p.max_shift = 2;
  Toy t{gen_data(Task::ToyDisparity, seed, 96, p),
        gen_data(Task::ToyDisparity, seed + 1, 48, p), {}};
  t.model = build_model({{8}, {{LayerKind::Dense, 10, 0}, {LayerKind::ReLU, 0, 0},
                               {LayerKind::Dense, 4, 0}}}, seed);
  return t;
}

TrainConfig quick() {
  TrainConfig c;
  c.learning_rate = 0.01;
  c.batch_size = 16;
  return c;
}

const MetricSpec kMetric = MetricSpec::parse("threshold:1");

bool terminal(const Model& m) {
  for (const auto& l : m.layers) {
    if (!l.has_weights()) continue;
    const auto cands = l.weight.grid->candidates();
    for (std::size_t i = 0; i < l.weight.size(); ++i) {
      if (!l.weight.gate[i]) continue;
      if (std::find(cands.begin(), cands.end(), l.weight.base.value[i]) == cands.end())
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("grid exponent range") {
  const Pow2Grid g5 = grid_for(1.0, 5);
  CHECK(g5.max_exp == 0);
  CHECK(g5.min_exp == -7);
  CHECK(g5.exponents_per_sign() == 8);
  CHECK(g5.candidates().size() == 17);
  const Pow2Grid g3 = grid_for(1.0, 3);
  CHECK(g3.max_exp == 0);
  CHECK(g3.min_exp == -1);
  CHECK(g3.exponents_per_sign() == 2);
  CHECK(grid_for(0.75, 5).max_exp == 0);
  CHECK(grid_for(0.7499, 5).max_exp == -1);
  CHECK_THROWS_AS(build_grid(Tensor({2}), {1, 1}, 5), NumericError);
  CHECK_THROWS_AS(Pow2Grid::from_max_exp(1, 0), ConfigError);
}

TEST_CASE("snap examples") {
  const Pow2Grid g = grid_for(1.0, 5);
  CHECK(snap(0.0, g) == 0.0);
  CHECK(snap(0.3, g) == 0.25);
  CHECK(brute_snap(0.3, g) == 0.25);
  CHECK(snap(0.125, g) == 0.125);
  CHECK(snap(-0.125, g) == -0.125);
  CHECK(snap(0.75, g) == 1.0);        // tie goes to the larger magnitude
  CHECK(snap(100.0, g) == 1.0);       // clamps to the top of the grid
  CHECK(snap(std::ldexp(1.0, -9), g) == 0.0);
  CHECK(snap(std::ldexp(1.0, -8), g) == std::ldexp(1.0, -7));
  CHECK_THROWS_AS(snap(std::nan(""), g), NumericError);
}

TEST_CASE("snap agrees with brute force") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int bits : {2, 3, 4, 5, 7, 9}) {
    for (int trial = 0; trial < 2000; ++trial) {
      const Pow2Grid g = Pow2Grid::from_max_exp(bits, static_cast<int>(rng() % 5) - 2);
      const double w = u(rng) * std::ldexp(1.0, g.max_exp);
      REQUIRE(snap(w, g) == brute_snap(w, g));
    }
    // Exact midpoints and candidates.
    const Pow2Grid g = Pow2Grid::from_max_exp(bits, 0);
    for (double c : g.candidates()) {
      CHECK(snap(c, g) == c);
      CHECK(snap(c * 0.75, g) == brute_snap(c * 0.75, g));
    }
  }
}

TEST_CASE("partition picks the top scores") {
  MaskedParameter p(Tensor({4}, {0.1, 0.2, 0.3, 0.4}));
  const auto chosen = partition(p, Tensor({4}, {1, 2, 3, 4}), 0.5);
  CHECK(chosen == std::vector<std::size_t>{2, 3});
}

TEST_CASE("partition at one takes everything free") {
  MaskedParameter p(Tensor({5}, {1, 2, 3, 4, 5}));
  p.gate[1] = 0;
  p.quant[2] = {QuantState::Kind::Quantized, 1};
  const auto chosen = partition(p, Tensor({5}, {5, 4, 3, 2, 1}), 1.0);
  CHECK(chosen == std::vector<std::size_t>{0, 3, 4});
}

TEST_CASE("partition rejects bad fractions") {
  MaskedParameter p(Tensor({4}, {1, 2, 3, 4}));
  CHECK_THROWS_AS(partition(p, Tensor({4}), 0.0), ConfigError);
  CHECK_THROWS_AS(partition(p, Tensor({4}), 1.5), ConfigError);
  p.scheduled_fraction = 0.8;
  CHECK_THROWS_AS(partition(p, Tensor({4}), 0.5), ConfigError);
}

TEST_CASE("random partition is reproducible") {
  QuantConfig cfg;
  cfg.partition = PartitionCriterion::Random;
  cfg.schedule = {0.5, 1.0};
  std::vector<std::uint8_t> picks[2];
  for (int k = 0; k < 2; ++k) {
    Toy t = toy(3);
    std::mt19937_64 rng(42);
    quant_step(t.model, cfg, 0, t.train.all(), LossKind::MSE, rng);
    for (const auto& q : t.model.layers[0].weight.quant) picks[k].push_back(!q.is_free());
  }
  CHECK(picks[0] == picks[1]);
}

TEST_CASE("quant config validation") {
  QuantConfig c;
  c.bits = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.schedule = {0.5, 0.4, 1.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.schedule = {0.5, 0.9};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.schedule = {};
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("every step reaches its scheduled fraction") {
  Toy t = toy(8);
  QuantConfig cfg;
  std::mt19937_64 rng(1);
  Sgd opt(0.01, 0.9);
  for (std::size_t k = 0; k < cfg.schedule.size(); ++k) {
    quant_step(t.model, cfg, k, t.train.all(), LossKind::MSE, rng);
    for (const auto& l : t.model.layers) {
      if (!l.has_weights()) continue;
      const double frac = static_cast<double>(l.weight.quantized_count()) /
                          static_cast<double>(l.weight.active_count());
      CHECK(frac >= cfg.schedule[k] - 1e-12);
    }
    if (k + 1 < cfg.schedule.size())
      retrain(t.model, t.train, LossKind::MSE, cfg, quick(), 1, opt, rng);
  }
  CHECK(fully_quantized(t.model));
}

TEST_CASE("retraining leaves quantized weights alone") {
  Toy t = toy(9);
  QuantConfig cfg;
  std::mt19937_64 rng(2);
  quant_step(t.model, cfg, 0, t.train.all(), LossKind::MSE, rng);
  std::vector<double> frozen;
  const auto& w = t.model.layers[0].weight;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!w.quant[i].is_free()) frozen.push_back(w.base.value[i]);
  Sgd opt(0.01, 0.9);
  retrain(t.model, t.train, LossKind::MSE, cfg, quick(), 2, opt, rng);
  std::size_t j = 0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!w.quant[i].is_free()) CHECK(w.base.value[i] == frozen[j++]);
}

TEST_CASE("quantized zero weights do not contribute") {
  Model m;
  m.layers.push_back(make_dense(2, 1, {1.0, 0.001}, {0.0}));
  test::quantize_all(m, 3);
  CHECK(m.layers[0].weight.quant[1].kind == QuantState::Kind::QuantizedZero);
  CHECK(evaluate(m, Tensor({1, 2}, {1.0, 1000.0}))[0] == 1.0);
}

TEST_CASE("inq loop schedules and retrain phases") {
  SUBCASE("single step is post-training quantization") {
    Toy t = toy(10);
    QuantConfig cfg;
    cfg.schedule = {1.0};
    const auto r = inq_loop(t.model, t.train, t.eval, LossKind::MSE, kMetric, cfg, quick(), 1);
    CHECK(r.retrain_phases == 0);
    CHECK(r.steps.size() == 1);
    CHECK(terminal(t.model));
  }
  SUBCASE("four steps retrain three times") {
    Toy t = toy(11);
    QuantConfig cfg;
    cfg.retrain_epochs = 1;
    const auto r = inq_loop(t.model, t.train, t.eval, LossKind::MSE, kMetric, cfg, quick(), 1);
    CHECK(r.retrain_phases == 3);
    CHECK(terminal(t.model));
  }
  SUBCASE("thirteen steps retrain twelve times") {
    Toy t = toy(12);
    QuantConfig cfg;
    cfg.retrain_epochs = 1;
    cfg.schedule = {0.5, 0.625, 0.75, 0.8, 0.825, 0.875, 0.925,
                    0.95, 0.975, 0.9875, 0.99, 0.995, 1.0};
    const auto r = inq_loop(t.model, t.train, t.eval, LossKind::MSE, kMetric, cfg, quick(), 1);
    CHECK(r.retrain_phases == 12);
    CHECK(terminal(t.model));
  }
}

TEST_CASE("interleaved pruning") {
  QuantConfig plain;
  plain.retrain_epochs = 2;
  QuantConfig zero = plain;
  zero.interleaved_prune_threshold = 0.0;
  QuantConfig on = plain;
  on.interleaved_prune_threshold = 1e-7;
  Toy a = toy(13), b = toy(13), c = toy(13);
  const auto ra = inq_loop(a.model, a.train, a.eval, LossKind::MSE, kMetric, plain, quick(), 5);
  const auto rb = inq_loop(b.model, b.train, b.eval, LossKind::MSE, kMetric, zero, quick(), 5);
  const auto rc = inq_loop(c.model, c.train, c.eval, LossKind::MSE, kMetric, on, quick(), 5);
  for (std::size_t li = 0; li < a.model.layers.size(); ++li) {
    if (!a.model.layers[li].has_weights()) continue;
    CHECK(a.model.layers[li].weight.base.value == b.model.layers[li].weight.base.value);
    CHECK(a.model.layers[li].weight.gate == b.model.layers[li].weight.gate);
  }
  CHECK(rc.steps.back().sparsity >= ra.steps.back().sparsity);
  CHECK(terminal(c.model));
}

TEST_CASE("step csv layout") {
  QuantResult r;
  r.steps.push_back({0, 0.5, 10, 0.1, 0.2, 80.0});
  std::ostringstream out;
  write_quant_csv(out, r);
  CHECK(out.str().rfind("step_fraction,sparsity,eval_metric\n", 0) == 0);
}
