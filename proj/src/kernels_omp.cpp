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

#include <cstdint>

#include "kernels_elem.hpp"
#include "spq/kernels.hpp"

namespace spq::kernels::omp {

// OpenMP wants signed loop counters for collapse().
using idx = std::int64_t;

void dense_forward(const DenseDims& d, std::span<const double> x,
                   std::span<const double> w, std::span<const double> b,
                   std::span<double> y) {
  const idx batch = static_cast<idx>(d.batch), out = static_cast<idx>(d.out);
#pragma omp parallel for collapse(2) schedule(static)
  for (idx n = 0; n < batch; ++n)
    for (idx o = 0; o < out; ++o)
      y[n * out + o] = elem::dense_out(d, x, w, b, n, o);
}

void dense_backward(const DenseDims& d, std::span<const double> x,
                    std::span<const double> w, std::span<const double> dy,
                    std::span<double> gw, std::span<double> gb,
                    std::span<double> dx) {
  const idx batch = static_cast<idx>(d.batch), in = static_cast<idx>(d.in),
            out = static_cast<idx>(d.out);
#pragma omp parallel for collapse(2) schedule(static)
  for (idx o = 0; o < out; ++o)
    for (idx i = 0; i < in; ++i)
      gw[o * in + i] = elem::dense_grad_w(d, x, dy, o, i);
#pragma omp parallel for schedule(static)
  for (idx o = 0; o < out; ++o) gb[o] = elem::dense_grad_b(d, dy, o);
  if (dx.empty()) return;
#pragma omp parallel for collapse(2) schedule(static)
  for (idx n = 0; n < batch; ++n)
    for (idx i = 0; i < in; ++i)
      dx[n * in + i] = elem::dense_grad_x(d, w, dy, n, i);
}

void conv_forward(const ConvDims& d, std::span<const double> x,
                  std::span<const double> w, std::span<const double> b,
                  std::span<double> y) {
  const idx batch = static_cast<idx>(d.batch),
            oc_n = static_cast<idx>(d.out_ch), oh = static_cast<idx>(d.out_h()),
            ow = static_cast<idx>(d.out_w());
#pragma omp parallel for collapse(3) schedule(static)
  for (idx n = 0; n < batch; ++n)
    for (idx oc = 0; oc < oc_n; ++oc)
      for (idx oy = 0; oy < oh; ++oy)
        for (idx ox = 0; ox < ow; ++ox)
          y[((n * oc_n + oc) * oh + oy) * ow + ox] =
              elem::conv_out(d, x, w, b, n, oc, oy, ox);
}

void conv_backward(const ConvDims& d, std::span<const double> x,
                   std::span<const double> w, std::span<const double> dy,
                   std::span<double> gw, std::span<double> gb,
                   std::span<double> dx) {
  const idx k = static_cast<idx>(d.kernel), oc_n = static_cast<idx>(d.out_ch),
            ic_n = static_cast<idx>(d.in_ch), batch = static_cast<idx>(d.batch),
            h = static_cast<idx>(d.height), wd = static_cast<idx>(d.width);
#pragma omp parallel for collapse(2) schedule(static)
  for (idx oc = 0; oc < oc_n; ++oc)
    for (idx ic = 0; ic < ic_n; ++ic)
      for (idx ky = 0; ky < k; ++ky)
        for (idx kx = 0; kx < k; ++kx)
          gw[((oc * ic_n + ic) * k + ky) * k + kx] =
              elem::conv_grad_w(d, x, dy, oc, ic, ky, kx);
#pragma omp parallel for schedule(static)
  for (idx oc = 0; oc < oc_n; ++oc) gb[oc] = elem::conv_grad_b(d, dy, oc);
  if (dx.empty()) return;
#pragma omp parallel for collapse(2) schedule(static)
  for (idx n = 0; n < batch; ++n)
    for (idx ic = 0; ic < ic_n; ++ic)
      for (idx iy = 0; iy < h; ++iy)
        for (idx ix = 0; ix < wd; ++ix)
          dx[((n * ic_n + ic) * h + iy) * wd + ix] =
              elem::conv_grad_x(d, w, dy, n, ic, iy, ix);
}

}  // namespace spq::kernels::omp
