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

#include "spq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spq/error.hpp"

namespace spq {

MetricSpec MetricSpec::parse(const std::string& text) {
  MetricSpec m;
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  if (name == "mse" || name == "top1") {
    if (colon != std::string::npos)
      throw ConfigError("metric '" + name + "' takes no parameter");
    m.kind = name == "mse" ? Kind::Mse : Kind::Top1;
    m.tau = 0.0;
    return m;
  }
  if (name == "threshold")
    m.kind = Kind::ThresholdAccuracy;
  else if (name == "delta")
    m.kind = Kind::DeltaRelative;
  else
    throw ConfigError("unknown metric '" + text + "'");
  if (colon == std::string::npos)
    throw ConfigError("metric '" + name + "' needs a tolerance, e.g. " + name +
                      ":0.02");
  try {
    std::size_t used = 0;
    m.tau = std::stod(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("tail");
  } catch (const std::exception&) {
    throw ConfigError("bad metric tolerance in '" + text + "'");
  }
  if (!(m.tau > 0.0)) throw ConfigError("metric tolerance must be > 0");
  return m;
}

std::string MetricSpec::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::ThresholdAccuracy: os << "threshold:" << tau; break;
    case Kind::DeltaRelative: os << "delta:" << tau; break;
    case Kind::Mse: os << "mse"; break;
    case Kind::Top1: os << "top1"; break;
  }
  return os.str();
}

double metric(const MetricSpec& spec, const Tensor& p, const Tensor& t) {
  if (p.shape() != t.shape())
    throw ShapeError("metric: prediction " + shape_str(p.shape()) +
                     " vs target " + shape_str(t.shape()));
  if (p.empty()) throw NumericError("metric of an empty set");
  const std::size_t m = p.numel();
  switch (spec.kind) {
    case MetricSpec::Kind::ThresholdAccuracy: {
      std::size_t ok = 0;
      for (std::size_t i = 0; i < m; ++i) ok += std::abs(p[i] - t[i]) <= spec.tau;
      return 100.0 * static_cast<double>(ok) / static_cast<double>(m);
    }
    case MetricSpec::Kind::DeltaRelative: {
      std::size_t ok = 0, counted = 0;
      for (std::size_t i = 0; i < m; ++i) {
        if (t[i] == 0.0) continue;
        ++counted;
        ok += std::abs(p[i] - t[i]) <= spec.tau * std::abs(t[i]);
      }
      if (counted == 0) throw NumericError("delta metric: every target is zero");
      return 100.0 * static_cast<double>(ok) / static_cast<double>(counted);
    }
    case MetricSpec::Kind::Mse: {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += (p[i] - t[i]) * (p[i] - t[i]);
      return s / static_cast<double>(m);
    }
    case MetricSpec::Kind::Top1: {
      const std::size_t rows = p.dim(0), cols = m / rows;
      std::size_t ok = 0;
      for (std::size_t r = 0; r < rows; ++r) {
        const auto pb = p.values().begin() + r * cols;
        const auto tb = t.values().begin() + r * cols;
        ok += std::max_element(pb, pb + cols) - pb ==
              std::max_element(tb, tb + cols) - tb;
      }
      return 100.0 * static_cast<double>(ok) / static_cast<double>(rows);
    }
  }
  return 0.0;
}

}  // namespace spq
