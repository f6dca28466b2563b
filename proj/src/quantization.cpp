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

#include "spq/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "spq/error.hpp"

namespace spq {

Pow2Grid Pow2Grid::from_max_exp(int bits, int max_exp) {
  if (bits < 2 || bits > 12)
    throw ConfigError("weight bits must lie in [2, 12], got " +
                      std::to_string(bits));
  Pow2Grid g;
  g.bits = bits;
  g.max_exp = max_exp;
  g.min_exp = max_exp - (1 << (bits - 2)) + 1;
  return g;
}

bool Pow2Grid::contains(double v) const {
  if (v == 0.0) return true;
  if (!std::isfinite(v)) return false;
  int e = 0;
  const double m = std::frexp(std::fabs(v), &e);
  return m == 0.5 && contains_exponent(e - 1);
}

std::vector<double> Pow2Grid::candidates() const {
  std::vector<double> c;
  for (int e = max_exp; e >= min_exp; --e) c.push_back(-std::ldexp(1.0, e));
  c.push_back(0.0);
  for (int e = min_exp; e <= max_exp; ++e) c.push_back(std::ldexp(1.0, e));
  return c;
}

void QuantConfig::validate() const {
  if (bits < 2 || bits > 12)
    throw ConfigError("weight bits must lie in [2, 12]");
  if (schedule.empty()) throw ConfigError("quantization schedule is empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0 && schedule[i] <= 1.0))
      throw ConfigError("schedule entries must lie in (0, 1]");
    if (i && !(schedule[i] > schedule[i - 1]))
      throw ConfigError("schedule must be strictly increasing");
  }
  if (schedule.back() != 1.0)
    throw ConfigError("schedule must end at exactly 1.0");
  if (retrain_epochs < 0) throw ConfigError("retrain epochs must be >= 0");
  if (interleaved_prune_threshold && !(*interleaved_prune_threshold >= 0.0))
    throw ConfigError("interleaved prune threshold must be >= 0");
}

Pow2Grid build_grid(const Tensor& weights, const std::vector<std::uint8_t>& gate,
                    int bits) {
  if (gate.size() != weights.numel())
    throw ShapeError("gate count does not match weight count");
  double s = 0.0;
  for (std::size_t i = 0; i < gate.size(); ++i)
    if (gate[i]) s = std::max(s, std::fabs(weights[i]));
  if (!(s > 0.0) || !std::isfinite(s))
    throw NumericError("cannot build a power-of-two grid: no nonzero weights");
  const int max_exp = static_cast<int>(std::floor(std::log2(4.0 * s / 3.0)));
  return Pow2Grid::from_max_exp(bits, max_exp);
}

namespace {

// Exponent of the snapped magnitude, or nullopt for zero.
std::optional<int> snap_exponent(double a, const Pow2Grid& grid) {
  if (a >= std::ldexp(1.0, grid.max_exp)) return grid.max_exp;
  if (a < std::ldexp(1.0, grid.min_exp - 1)) return std::nullopt;
  if (a <= std::ldexp(1.0, grid.min_exp)) return grid.min_exp;
  int e = 0;
  std::frexp(a, &e);
  const int k = e - 1;  // 2^k <= a < 2^(k+1)
  return a >= 1.5 * std::ldexp(1.0, k) ? k + 1 : k;
}

}  // namespace

double snap(double w, const Pow2Grid& grid) {
  if (!std::isfinite(w)) throw NumericError("cannot snap a non-finite weight");
  const auto e = snap_exponent(std::fabs(w), grid);
  if (!e) return 0.0;
  const double v = std::ldexp(1.0, *e);
  return w < 0.0 ? -v : v;
}

std::vector<std::size_t> partition(MaskedParameter& param, const Tensor& scores,
                                   double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ConfigError("partition fraction must lie in (0, 1]");
  if (fraction < param.scheduled_fraction)
    throw ConfigError("partition fraction " + std::to_string(fraction) +
                      " is below the fraction already scheduled (" +
                      std::to_string(param.scheduled_fraction) + ")");
  if (scores.numel() != param.size())
    throw ShapeError("partition scores do not match the weight count");
  param.scheduled_fraction = fraction;

  const std::size_t total = param.active_count();
  const std::size_t already = param.quantized_count();
  const auto target = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(total) - 1e-9));
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < param.size(); ++i)
    if (param.gate[i] && param.quant[i].is_free()) eligible.push_back(i);
  const std::size_t need =
      std::min(eligible.size(), target > already ? target - already : 0);
  std::stable_sort(eligible.begin(), eligible.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  eligible.resize(need);
  std::sort(eligible.begin(), eligible.end());
  return eligible;
}

namespace {

Tensor partition_scores(const MaskedParameter& p, PartitionCriterion c,
                        std::mt19937_64& rng) {
  switch (c) {
    case PartitionCriterion::Abs:
      return compute_scores(p, PruneCriterion::AbsValue, true);
    case PartitionCriterion::Taylor:
      return compute_scores(p, PruneCriterion::TaylorScore, true);
    case PartitionCriterion::Random: {
      Tensor s(p.base.value.shape());
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (auto& v : s.values()) v = u(rng);
      return s;
    }
  }
  return {};
}

void clamp_free(Model& model) {
  for (auto& l : model.layers) {
    if (!l.has_weights() || !l.weight.grid) continue;
    const double lim = 1.5 * std::ldexp(1.0, l.weight.grid->max_exp);
    auto v = l.weight.base.value.values();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (l.weight.gate[i] && l.weight.quant[i].is_free())
        v[i] = std::clamp(v[i], -lim, lim);
  }
}

void interleaved_threshold(Model& model, double threshold) {
  for (auto& l : model.layers) {
    if (!l.has_weights()) continue;
    Tensor scores = compute_scores(l.weight, PruneCriterion::TaylorScore, true);
    for (std::size_t i = 0; i < l.weight.size(); ++i)
      if (!l.weight.quant[i].is_free()) scores[i] = INFINITY;
    apply_threshold(l.weight, scores, threshold);
    auto g = l.weight.base.grad.values();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!l.weight.gate[i]) g[i] = 0.0;
  }
}

}  // namespace

StepStats quant_step(Model& model, const QuantConfig& config,
                     std::size_t step_index, const Batch& calibration,
                     LossKind loss, std::mt19937_64& rng) {
  if (step_index >= config.schedule.size())
    throw ConfigError("quantization step index out of range");
  const double fraction = config.schedule[step_index];

  if (config.partition == PartitionCriterion::Taylor) {
    const Tensor pred = forward(model, calibration.inputs, GateMode::Apply);
    backward(model, loss, pred, calibration.targets);
  }

  StepStats st;
  st.step = step_index;
  st.fraction = fraction;
  for (auto& l : model.layers) {
    if (!l.has_weights()) continue;
    MaskedParameter& p = l.weight;
    if (!p.grid && p.active_count() > 0)
      p.grid = build_grid(p.base.value, p.gate, config.bits);
    const Tensor scores = partition_scores(p, config.partition, rng);
    const auto chosen = partition(p, scores, fraction);
    for (std::size_t i : chosen) {
      const double q = snap(p.base.value[i], *p.grid);
      p.base.value[i] = q;
      if (q == 0.0) {
        p.quant[i] = {QuantState::Kind::QuantizedZero, 0};
      } else {
        int e = 0;
        std::frexp(q, &e);
        p.quant[i] = {QuantState::Kind::Quantized, e - 1};
      }
    }
    st.newly_quantized += chosen.size();
  }
  st.sparsity = sparsity(model);
  return st;
}

double retrain(Model& model, const Dataset& data, LossKind loss,
               const QuantConfig& config, const TrainConfig& train, int epochs,
               Sgd& opt, std::mt19937_64& rng) {
  EpochHooks hooks;
  hooks.mode = GateMode::Apply;
  hooks.freeze_gated = true;
  hooks.after_step = clamp_free;
  if (config.interleaved_prune_threshold) {
    const double t = *config.interleaved_prune_threshold;
    hooks.after_backward = [t](Model& m) { interleaved_threshold(m, t); };
  }
  double last = 0.0;
  for (int e = 0; e < epochs; ++e)
    last = train_epoch(model, data, loss, train, opt, rng, hooks);
  return last;
}

QuantResult inq_loop(Model& model, const Dataset& train_data,
                     const Dataset& eval_data, LossKind loss,
                     const MetricSpec& metric_spec, const QuantConfig& config,
                     const TrainConfig& train, std::uint64_t seed) {
  config.validate();
  train.validate();
  std::mt19937_64 rng(seed);
  Sgd opt(train.learning_rate, train.momentum);
  QuantResult r;
  r.initial_sparsity = sparsity(model);
  r.initial_metric = evaluate_metric(model, eval_data, metric_spec);
  const std::size_t n = train_data.size();
  for (std::size_t k = 0; k < config.schedule.size(); ++k) {
    std::vector<std::size_t> rows(std::min(train.batch_size, n));
    for (auto& row : rows) row = rng() % n;
    StepStats st =
        quant_step(model, config, k, train_data.gather(rows), loss, rng);
    if (k + 1 < config.schedule.size()) {
      st.train_loss =
          retrain(model, train_data, loss, config, train, config.retrain_epochs,
                  opt, rng);
      ++r.retrain_phases;
      st.sparsity = sparsity(model);
    }
    st.eval_metric = evaluate_metric(model, eval_data, metric_spec);
    r.steps.push_back(st);
  }
  return r;
}

bool fully_quantized(const Model& model) {
  for (const auto& l : model.layers) {
    if (!l.has_weights()) continue;
    for (std::size_t i = 0; i < l.weight.size(); ++i) {
      if (!l.weight.gate[i]) continue;
      if (!l.weight.grid || !l.weight.grid->contains(l.weight.base.value[i]))
        return false;
    }
  }
  return true;
}

void write_quant_csv(std::ostream& out, const QuantResult& result) {
  out << "step_fraction,sparsity,eval_metric\n";
  char buf[96];
  std::snprintf(buf, sizeof buf, "0,%.6f,%.4f\n", result.initial_sparsity,
                result.initial_metric);
  out << buf;
  for (const auto& s : result.steps) {
    std::snprintf(buf, sizeof buf, "%.6g,%.6f,%.4f\n", s.fraction, s.sparsity,
                  s.eval_metric);
    out << buf;
  }
}

}  // namespace spq
