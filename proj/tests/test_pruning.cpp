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

#include <algorithm>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "spq/costmodel.hpp"
#include "spq/error.hpp"
#include "spq/pruning.hpp"

using namespace spq;

namespace {

struct Toy {
  Dataset train, eval;
  Model model;
};

Toy toy(std::uint64_t seed) {
  DataParams p;
  p.length = 4;
  p.max_shift = 2;
  Toy t{gen_data(Task::ToyDisparity, seed, 128, p),
        gen_data(Task::ToyDisparity, seed + 1, 64, p), {}};
  t.model = build_model({{8}, {{LayerKind::Dense, 12, 0}, {LayerKind::ReLU, 0, 0},
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

}  // namespace

TEST_CASE("taylor score values") {
  CHECK(taylor_score(0.5, 0.01) == doctest::Approx(2.5e-5).epsilon(1e-12));
  CHECK(taylor_score(123.0, 0.0) == 0.0);
  CHECK(taylor_score(-2.0, 3.0) == 36.0);
}

TEST_CASE("magnitude score values and ranking") {
  CHECK(abs_score(-0.3) == 0.3);
  CHECK(abs_score(0.0) == 0.0);
  const std::vector<double> w{0.1, -0.5, 0.2};
  std::vector<std::size_t> order(3);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return abs_score(w[a]) > abs_score(w[b]); });
  CHECK(order == std::vector<std::size_t>{1, 2, 0});
}

TEST_CASE("threshold closes gates strictly below") {
  MaskedParameter p(Tensor({2}, {1.0, 1.0}));
  const Tensor scores({2}, {1e-12, 1e-10});
  CHECK(apply_threshold(p, scores, 1e-11) == 1);
  CHECK(p.gate == std::vector<std::uint8_t>{0, 1});

  MaskedParameter q(Tensor({2}, {1.0, 1.0}));
  CHECK(apply_threshold(q, Tensor({2}, {0.0, 0.0}), 0.0) == 0);

  MaskedParameter closed(Tensor({2}, {1.0, 1.0}));
  closed.gate = {0, 0};
  CHECK(apply_threshold(closed, scores, 1.0) == 0);
  CHECK(closed.gate == std::vector<std::uint8_t>{0, 0});

  CHECK_THROWS_AS(apply_threshold(q, scores, -1.0), ConfigError);
  CHECK_THROWS_AS(apply_threshold(q, Tensor({3}), 1.0), ShapeError);
}

TEST_CASE("sparsity of fresh and fully closed models") {
  Toy t = toy(1);
  CHECK(sparsity(t.model) == 0.0);
  for (auto& l : t.model.layers)
    std::fill(l.weight.gate.begin(), l.weight.gate.end(), std::uint8_t{0});
  CHECK(sparsity(t.model) == 1.0);
  CHECK(sparsity_from_counts(0.095, 5.22) == doctest::Approx(0.9818).epsilon(5e-5));
}

TEST_CASE("hard fine-tuning never moves a pruned weight") {
  Toy t = toy(2);
  auto& w = t.model.layers[0].weight;
  w.gate[3] = 0;
  w.gate[7] = 0;
  const double v3 = w.base.value[3], v7 = w.base.value[7];
  PruneConfig cfg;
  cfg.threshold = 0.0;
  Sgd opt(0.01, 0.9);
  std::mt19937_64 rng(1);
  prune_epoch(t.model, t.train, LossKind::MSE, cfg, quick(), opt, rng);
  CHECK(w.base.value[3] == v3);
  CHECK(w.base.value[7] == v7);
}

TEST_CASE("semi-soft fine-tuning moves pruned weights but not outputs") {
  Toy t = toy(3);
  auto& w = t.model.layers[0].weight;
  w.gate[5] = 0;
  const double before = w.base.value[5];
  PruneConfig cfg;
  cfg.threshold = 0.0;
  cfg.strategy = PruneStrategy::SemiSoft;
  Sgd opt(0.01, 0.9);
  std::mt19937_64 rng(1);
  prune_epoch(t.model, t.train, LossKind::MSE, cfg, quick(), opt, rng);
  CHECK(w.base.value[5] != before);
  const Tensor y1 = evaluate(t.model, t.eval.inputs);
  w.base.value[5] = 1234.5;
  CHECK(evaluate(t.model, t.eval.inputs) == y1);
}

TEST_CASE("a positive threshold prunes more than none") {
  PruneConfig cfg;
  std::size_t nz[2];
  for (int k = 0; k < 2; ++k) {
    Toy t = toy(4);
    cfg.threshold = k == 0 ? 0.0 : 1e-6;
    Sgd opt(0.01, 0.9);
    std::mt19937_64 rng(1);
    prune_epoch(t.model, t.train, LossKind::MSE, cfg, quick(), opt, rng);
    nz[k] = t.model.effective_nonzero();
  }
  CHECK(nz[1] < nz[0]);
}

TEST_CASE("prune loop stopping rules") {
  SUBCASE("zero target stops after one epoch") {
    Toy t = toy(5);
    PruneConfig cfg;
    cfg.target_sparsity = 0.0;
    const auto r = prune_loop(t.model, t.train, t.eval, LossKind::MSE, kMetric, cfg, quick(), 1);
    CHECK(r.trajectory.size() == 1);
  }
  SUBCASE("zero threshold keeps the initial sparsity") {
    Toy t = toy(6);
    PruneConfig cfg;
    cfg.threshold = 0.0;
    cfg.max_epochs = 5;
    const auto r = prune_loop(t.model, t.train, t.eval, LossKind::MSE, kMetric, cfg, quick(), 1);
    CHECK(r.trajectory.back().sparsity == r.initial_sparsity);
  }
  SUBCASE("stalled sparsity ends the loop early") {
    Toy t = toy(7);
    PruneConfig cfg;
    cfg.threshold = 0.0;
    cfg.max_epochs = 50;
    const auto r = prune_loop(t.model, t.train, t.eval, LossKind::MSE, kMetric, cfg, quick(), 1);
    CHECK(r.trajectory.size() == 3);
  }
}

TEST_CASE("sparsity trajectories never decrease") {
  for (std::uint64_t seed = 10; seed < 16; ++seed) {
    Toy t = toy(seed);
    PruneConfig cfg;
    cfg.threshold = seed % 2 ? 1e-7 : 1e-6;
    cfg.max_epochs = 6;
    cfg.strategy = seed % 3 ? PruneStrategy::Hard : PruneStrategy::SemiSoft;
    cfg.criterion = seed % 4 ? PruneCriterion::TaylorScore : PruneCriterion::AbsValue;
    if (cfg.criterion == PruneCriterion::AbsValue) cfg.threshold = 0.05;
    const auto r = prune_loop(t.model, t.train, t.eval, LossKind::MSE, kMetric, cfg, quick(), seed);
    double prev = r.initial_sparsity;
    for (const auto& s : r.trajectory) {
      CHECK(s.sparsity >= prev);
      prev = s.sparsity;
    }
  }
}

TEST_CASE("prune config validation") {
  PruneConfig c;
  c.threshold = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.max_epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.target_sparsity = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("trajectory csv layout") {
  PruneResult r;
  r.initial_sparsity = 0.0;
  r.initial_metric = 90.0;
  r.trajectory.push_back({1, 0.25, 0.5, 88.0});
  std::ostringstream out;
  write_prune_csv(out, r);
  const std::string s = out.str();
  CHECK(s.rfind("epoch,sparsity,train_loss,eval_metric\n", 0) == 0);
  CHECK(s.find("\n1,") != std::string::npos);
}
