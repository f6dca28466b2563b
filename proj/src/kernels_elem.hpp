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

#ifndef SPQ_KERNELS_ELEM_HPP_
#define SPQ_KERNELS_ELEM_HPP_

// Per-output-element bodies shared by the serial and OpenMP kernels.

#include <cstddef>
#include <span>

#include "spq/kernels.hpp"

namespace spq::kernels::elem {

inline double dense_out(const DenseDims& d, std::span<const double> x,
                        std::span<const double> w, std::span<const double> b,
                        std::size_t n, std::size_t o) {
  const double* xr = x.data() + n * d.in;
  const double* wr = w.data() + o * d.in;
  double acc = b[o];
  for (std::size_t i = 0; i < d.in; ++i) acc += wr[i] * xr[i];
  return acc;
}

inline double dense_grad_w(const DenseDims& d, std::span<const double> x,
                           std::span<const double> dy, std::size_t o,
                           std::size_t i) {
  double acc = 0.0;
  for (std::size_t n = 0; n < d.batch; ++n)
    acc += dy[n * d.out + o] * x[n * d.in + i];
  return acc;
}

inline double dense_grad_b(const DenseDims& d, std::span<const double> dy,
                           std::size_t o) {
  double acc = 0.0;
  for (std::size_t n = 0; n < d.batch; ++n) acc += dy[n * d.out + o];
  return acc;
}

inline double dense_grad_x(const DenseDims& d, std::span<const double> w,
                           std::span<const double> dy, std::size_t n,
                           std::size_t i) {
  double acc = 0.0;
  for (std::size_t o = 0; o < d.out; ++o)
    acc += dy[n * d.out + o] * w[o * d.in + i];
  return acc;
}

inline double conv_out(const ConvDims& d, std::span<const double> x,
                       std::span<const double> w, std::span<const double> b,
                       std::size_t n, std::size_t oc, std::size_t oy,
                       std::size_t ox) {
  const std::size_t k = d.kernel;
  double acc = b[oc];
  for (std::size_t ic = 0; ic < d.in_ch; ++ic) {
    const double* xp = x.data() + ((n * d.in_ch + ic) * d.height) * d.width;
    const double* wp = w.data() + ((oc * d.in_ch + ic) * k) * k;
    for (std::size_t ky = 0; ky < k; ++ky)
      for (std::size_t kx = 0; kx < k; ++kx)
        acc += wp[ky * k + kx] * xp[(oy + ky) * d.width + ox + kx];
  }
  return acc;
}

inline double conv_grad_w(const ConvDims& d, std::span<const double> x,
                          std::span<const double> dy, std::size_t oc,
                          std::size_t ic, std::size_t ky, std::size_t kx) {
  const std::size_t oh = d.out_h(), ow = d.out_w();
  double acc = 0.0;
  for (std::size_t n = 0; n < d.batch; ++n) {
    const double* g = dy.data() + (n * d.out_ch + oc) * oh * ow;
    const double* xp = x.data() + ((n * d.in_ch + ic) * d.height) * d.width;
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox)
        acc += g[oy * ow + ox] * xp[(oy + ky) * d.width + ox + kx];
  }
  return acc;
}

inline double conv_grad_b(const ConvDims& d, std::span<const double> dy,
                          std::size_t oc) {
  const std::size_t plane = d.out_h() * d.out_w();
  double acc = 0.0;
  for (std::size_t n = 0; n < d.batch; ++n) {
    const double* g = dy.data() + (n * d.out_ch + oc) * plane;
    for (std::size_t p = 0; p < plane; ++p) acc += g[p];
  }
  return acc;
}

inline double conv_grad_x(const ConvDims& d, std::span<const double> w,
                          std::span<const double> dy, std::size_t n,
                          std::size_t ic, std::size_t iy, std::size_t ix) {
  const std::size_t k = d.kernel, oh = d.out_h(), ow = d.out_w();
  double acc = 0.0;
  for (std::size_t oc = 0; oc < d.out_ch; ++oc) {
    const double* g = dy.data() + (n * d.out_ch + oc) * oh * ow;
    const double* wp = w.data() + ((oc * d.in_ch + ic) * k) * k;
    for (std::size_t ky = 0; ky < k; ++ky) {
      if (iy < ky || iy - ky >= oh) continue;
      for (std::size_t kx = 0; kx < k; ++kx) {
        if (ix < kx || ix - kx >= ow) continue;
        acc += g[(iy - ky) * ow + (ix - kx)] * wp[ky * k + kx];
      }
    }
  }
  return acc;
}

}  // namespace spq::kernels::elem

#endif  // SPQ_KERNELS_ELEM_HPP_
