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

#ifndef SPQ_METRICS_HPP_
#define SPQ_METRICS_HPP_

#include <string>

#include "spq/tensor.hpp"

namespace spq {

struct MetricSpec {
  enum class Kind { ThresholdAccuracy, DeltaRelative, Mse, Top1 };
  Kind kind = Kind::ThresholdAccuracy;
  double tau = 3.0;

  // "threshold:3", "delta:0.02", "mse", "top1"
  static MetricSpec parse(const std::string& text);
  std::string str() const;
  bool higher_is_better() const { return kind != Kind::Mse; }
};

/// threshold: % of entries with |p - t| <= tau (inclusive).
/// delta: % of entries with t != 0 and |p - t| <= tau * |t|.
/// top1: % of rows whose argmax matches. mse: mean squared error (not a %).
double metric(const MetricSpec& spec, const Tensor& predictions,
              const Tensor& targets);

}  // namespace spq

#endif  // SPQ_METRICS_HPP_
