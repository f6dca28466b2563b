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

#include "spq/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "spq/error.hpp"
#include "spq/kernels.hpp"

namespace spq {

namespace {

std::vector<double> effective_weights(const Layer& l, GateMode mode) {
  auto v = l.weight.base.value.values();
  std::vector<double> w(v.begin(), v.end());
  if (mode == GateMode::Apply)
    for (std::size_t i = 0; i < w.size(); ++i)
      if (!l.weight.gate[i]) w[i] = 0.0;
  return w;
}

std::string layer_tag(std::size_t li, const Layer& l) {
  return "layer " + std::to_string(li) + " (" + layer_kind_name(l.kind) + ")";
}

Tensor layer_forward(std::size_t li, const Layer& l, const Tensor& x,
                     GateMode mode) {
  if (x.rank() < 2 || x.dim(0) == 0)
    throw ShapeError(layer_tag(li, l) + ": input must be batched, got " +
                     shape_str(x.shape()));
  const std::size_t batch = x.dim(0);
  const auto be = kernels::default_backend();
  switch (l.kind) {
    case LayerKind::Dense: {
      if (x.numel() / batch != l.in)
        throw ShapeError(layer_tag(li, l) + ": expects " + std::to_string(l.in) +
                         " features per sample, input is " +
                         shape_str(x.shape()));
      Tensor y({batch, l.out});
      const auto w = effective_weights(l, mode);
      kernels::dense_forward(be, {batch, l.in, l.out}, x.values(), w,
                             l.bias.value.values(), y.values());
      return y;
    }
    case LayerKind::Conv2d: {
      if (x.rank() != 4 || x.dim(1) != l.in || x.dim(2) < l.kernel ||
          x.dim(3) < l.kernel)
        throw ShapeError(layer_tag(li, l) + ": expects [N," +
                         std::to_string(l.in) + ",H>=" +
                         std::to_string(l.kernel) + ",W>=" +
                         std::to_string(l.kernel) + "], input is " +
                         shape_str(x.shape()));
      const kernels::ConvDims d{batch, l.in, x.dim(2), x.dim(3), l.out,
                                l.kernel};
      Tensor y({batch, l.out, d.out_h(), d.out_w()});
      const auto w = effective_weights(l, mode);
      kernels::conv_forward(be, d, x.values(), w, l.bias.value.values(),
                            y.values());
      return y;
    }
    case LayerKind::ReLU: {
      Tensor y = x;
      for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
      return y;
    }
  }
  return x;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(what) + ": prediction " + shape_str(a.shape()) +
                     " vs target " + shape_str(b.shape()));
}

// Row-wise softmax over the trailing dimension of a [N, C] view.
void softmax_rows(std::span<const double> z, std::size_t rows,
                  std::size_t cols, std::vector<double>& out) {
  out.resize(z.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* zr = z.data() + r * cols;
    double* pr = out.data() + r * cols;
    const double mx = *std::max_element(zr, zr + cols);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      pr[c] = std::exp(zr[c] - mx);
      sum += pr[c];
    }
    for (std::size_t c = 0; c < cols; ++c) pr[c] /= sum;
  }
}

// Returns E and fills dE/dprediction.
double loss_and_grad(LossKind kind, const Tensor& p, const Tensor& t,
                     std::vector<double>* grad) {
  check_same_shape(p, t, "loss");
  if (p.empty()) throw NumericError("loss of an empty batch");
  const std::size_t m = p.numel();
  if (grad) grad->assign(m, 0.0);
  if (kind == LossKind::MSE) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = p[i] - t[i];
      sum += d * d;
      if (grad) (*grad)[i] = 2.0 * d / static_cast<double>(m);
    }
    return sum / static_cast<double>(m);
  }
  const std::size_t rows = p.dim(0);
  const std::size_t cols = m / rows;
  for (double v : t.values())
    if (v < 0.0) throw NumericError("cross-entropy targets must be >= 0");
  std::vector<double> prob;
  softmax_rows(p.values(), rows, cols, prob);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* zr = p.data() + r * cols;
    const double mx = *std::max_element(zr, zr + cols);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) sum += std::exp(zr[c] - mx);
    const double lse = mx + std::log(sum);
    double tsum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double tc = t[r * cols + c];
      if (tc != 0.0) total += tc * (lse - zr[c]);
      tsum += tc;
    }
    if (grad)
      for (std::size_t c = 0; c < cols; ++c)
        (*grad)[r * cols + c] =
            (prob[r * cols + c] * tsum - t[r * cols + c]) /
            static_cast<double>(rows);
  }
  return total / static_cast<double>(rows);
}

}  // namespace

Tensor forward(Model& model, const Tensor& input, GateMode mode) {
  model.tape.clear();
  model.tape.reserve(model.layers.size() + 1);
  model.tape.push_back(input);
  for (std::size_t li = 0; li < model.layers.size(); ++li)
    model.tape.push_back(
        layer_forward(li, model.layers[li], model.tape.back(), mode));
  model.tape_gated = mode == GateMode::Apply;
  if (!model.tape.back().all_finite())
    throw NumericError("forward pass produced non-finite values");
  return model.tape.back();
}

Tensor evaluate(const Model& model, const Tensor& input) {
  Tensor cur = input;
  for (std::size_t li = 0; li < model.layers.size(); ++li)
    cur = layer_forward(li, model.layers[li], cur, GateMode::Apply);
  return cur;
}

double loss_value(LossKind kind, const Tensor& prediction,
                  const Tensor& target) {
  return loss_and_grad(kind, prediction, target, nullptr);
}

double backward(Model& model, LossKind kind, const Tensor& prediction,
                const Tensor& target) {
  if (model.tape.size() != model.layers.size() + 1)
    throw Error("backward called without a recorded forward pass");
  if (prediction.shape() != model.tape.back().shape())
    throw ShapeError("backward: prediction " + shape_str(prediction.shape()) +
                     " does not match recorded output " +
                     shape_str(model.tape.back().shape()));
  std::vector<double> grad;
  const double loss = loss_and_grad(kind, prediction, target, &grad);
  if (!std::isfinite(loss)) throw NumericError("loss is not finite");

  const GateMode mode = model.tape_gated ? GateMode::Apply : GateMode::Ignore;
  const auto be = kernels::default_backend();
  for (std::size_t li = model.layers.size(); li-- > 0;) {
    Layer& l = model.layers[li];
    const Tensor& x = model.tape[li];
    const std::size_t batch = x.dim(0);
    const bool need_dx = li > 0;
    std::vector<double> dx(need_dx ? x.numel() : 0);
    switch (l.kind) {
      case LayerKind::Dense: {
        const auto w = effective_weights(l, mode);
        kernels::dense_backward(be, {batch, l.in, l.out}, x.values(), w, grad,
                                l.weight.base.grad.values(),
                                l.bias.grad.values(), dx);
        break;
      }
      case LayerKind::Conv2d: {
        const auto w = effective_weights(l, mode);
        const kernels::ConvDims d{batch, l.in, x.dim(2), x.dim(3), l.out,
                                  l.kernel};
        kernels::conv_backward(be, d, x.values(), w, grad,
                               l.weight.base.grad.values(),
                               l.bias.grad.values(), dx);
        break;
      }
      case LayerKind::ReLU:
        if (need_dx)
          for (std::size_t i = 0; i < dx.size(); ++i)
            dx[i] = x[i] > 0.0 ? grad[i] : 0.0;
        break;
    }
    if (l.has_weights() && mode == GateMode::Apply) {
      auto g = l.weight.base.grad.values();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!l.weight.gate[i]) g[i] = 0.0;
    }
    if (l.has_weights() &&
        (!l.weight.base.grad.all_finite() || !l.bias.grad.all_finite()))
      throw NumericError("non-finite gradient at layer " + std::to_string(li));
    grad = std::move(dx);
  }
  model.tape.clear();
  return loss;
}

std::vector<Parameter*> parameters(Model& model) {
  std::vector<Parameter*> out;
  for (auto& l : model.layers) {
    if (!l.has_weights()) continue;
    out.push_back(&l.weight.base);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<Tensor> finite_diff_grad(Model& model, LossKind kind,
                                     const Batch& batch, GateMode mode,
                                     double epsilon) {
  if (!(epsilon > 0.0)) throw NumericError("finite-difference epsilon must be > 0");
  std::vector<Tensor> grads;
  for (Parameter* p : parameters(model)) {
    Tensor g(p->value.shape());
    for (std::size_t i = 0; i < p->value.numel(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + epsilon;
      const double up = loss_value(kind, forward(model, batch.inputs, mode),
                                   batch.targets);
      p->value[i] = orig - epsilon;
      const double down = loss_value(kind, forward(model, batch.inputs, mode),
                                     batch.targets);
      p->value[i] = orig;
      g[i] = (up - down) / (2.0 * epsilon);
    }
    grads.push_back(std::move(g));
  }
  model.tape.clear();
  return grads;
}

Sgd::Sgd(double learning_rate, double momentum)
    : lr_(learning_rate), momentum_(momentum) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ConfigError("momentum must lie in [0, 1)");
}

void Sgd::step(std::span<const ParamRef> params) {
  for (const auto& ref : params)
    if (!ref.param->grad.all_finite())
      throw NumericError("non-finite gradient passed to the optimizer");
  for (const auto& ref : params) {
    Parameter& p = *ref.param;
    auto& vel = velocity_[p.id];
    if (vel.size() != p.value.numel()) vel.assign(p.value.numel(), 0.0);
    for (std::size_t i = 0; i < vel.size(); ++i) {
      if (ref.frozen && (*ref.frozen)[i]) {
        vel[i] = 0.0;
        continue;
      }
      vel[i] = momentum_ * vel[i] + p.grad[i];
      p.value[i] -= lr_ * vel[i];
    }
  }
}

}  // namespace spq
