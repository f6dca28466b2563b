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

#ifndef SPQ_POW2_GRID_HPP_
#define SPQ_POW2_GRID_HPP_

#include <cstddef>
#include <vector>

namespace spq {

/// Codebook {±2^n : min_exp <= n <= max_exp} ∪ {0} for a b-bit weight.
/// A b-bit code holds one sign bit and b-1 bits of exponent index, one
/// index being reserved for zero, which leaves 2^(b-2) exponents per sign.
struct Pow2Grid {
  int bits = 0;
  int max_exp = 0;  // n1
  int min_exp = 0;  // n2

  static Pow2Grid from_max_exp(int bits, int max_exp);

  int exponents_per_sign() const { return max_exp - min_exp + 1; }
  bool contains_exponent(int e) const { return e >= min_exp && e <= max_exp; }
  // True for 0 and for ±2^n inside the exponent range, by exact comparison.
  bool contains(double v) const;
  // All candidates in ascending order, 0 included.
  std::vector<double> candidates() const;

  friend bool operator==(const Pow2Grid&, const Pow2Grid&) = default;
};

}  // namespace spq

#endif  // SPQ_POW2_GRID_HPP_
