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

#include <atomic>

#include "kernels_elem.hpp"
#include "spq/kernels.hpp"

namespace spq::kernels {

namespace {
std::atomic<Backend> g_backend{Backend::Parallel};
}

Backend default_backend() { return g_backend.load(); }
void set_default_backend(Backend backend) { g_backend.store(backend); }

namespace serial {

void dense_forward(const DenseDims& d, std::span<const double> x,
                   std::span<const double> w, std::span<const double> b,
                   std::span<double> y) {
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t o = 0; o < d.out; ++o)
      y[n * d.out + o] = elem::dense_out(d, x, w, b, n, o);
}

void dense_backward(const DenseDims& d, std::span<const double> x,
                    std::span<const double> w, std::span<const double> dy,
                    std::span<double> gw, std::span<double> gb,
                    std::span<double> dx) {
  for (std::size_t o = 0; o < d.out; ++o) {
    for (std::size_t i = 0; i < d.in; ++i)
      gw[o * d.in + i] = elem::dense_grad_w(d, x, dy, o, i);
    gb[o] = elem::dense_grad_b(d, dy, o);
  }
  if (dx.empty()) return;
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t i = 0; i < d.in; ++i)
      dx[n * d.in + i] = elem::dense_grad_x(d, w, dy, n, i);
}

void conv_forward(const ConvDims& d, std::span<const double> x,
                  std::span<const double> w, std::span<const double> b,
                  std::span<double> y) {
  const std::size_t oh = d.out_h(), ow = d.out_w();
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t oc = 0; oc < d.out_ch; ++oc)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox)
          y[((n * d.out_ch + oc) * oh + oy) * ow + ox] =
              elem::conv_out(d, x, w, b, n, oc, oy, ox);
}

void conv_backward(const ConvDims& d, std::span<const double> x,
                   std::span<const double> w, std::span<const double> dy,
                   std::span<double> gw, std::span<double> gb,
                   std::span<double> dx) {
  const std::size_t k = d.kernel;
  for (std::size_t oc = 0; oc < d.out_ch; ++oc) {
    for (std::size_t ic = 0; ic < d.in_ch; ++ic)
      for (std::size_t ky = 0; ky < k; ++ky)
        for (std::size_t kx = 0; kx < k; ++kx)
          gw[((oc * d.in_ch + ic) * k + ky) * k + kx] =
              elem::conv_grad_w(d, x, dy, oc, ic, ky, kx);
    gb[oc] = elem::conv_grad_b(d, dy, oc);
  }
  if (dx.empty()) return;
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t ic = 0; ic < d.in_ch; ++ic)
      for (std::size_t iy = 0; iy < d.height; ++iy)
        for (std::size_t ix = 0; ix < d.width; ++ix)
          dx[((n * d.in_ch + ic) * d.height + iy) * d.width + ix] =
              elem::conv_grad_x(d, w, dy, n, ic, iy, ix);
}

}  // namespace serial

void dense_forward(Backend be, const DenseDims& d, std::span<const double> x,
                   std::span<const double> w, std::span<const double> b,
                   std::span<double> y) {
  if (be == Backend::Serial)
    serial::dense_forward(d, x, w, b, y);
  else
    omp::dense_forward(d, x, w, b, y);
}

void dense_backward(Backend be, const DenseDims& d, std::span<const double> x,
                    std::span<const double> w, std::span<const double> dy,
                    std::span<double> gw, std::span<double> gb,
                    std::span<double> dx) {
  if (be == Backend::Serial)
    serial::dense_backward(d, x, w, dy, gw, gb, dx);
  else
    omp::dense_backward(d, x, w, dy, gw, gb, dx);
}

void conv_forward(Backend be, const ConvDims& d, std::span<const double> x,
                  std::span<const double> w, std::span<const double> b,
                  std::span<double> y) {
  if (be == Backend::Serial)
    serial::conv_forward(d, x, w, b, y);
  else
    omp::conv_forward(d, x, w, b, y);
}

void conv_backward(Backend be, const ConvDims& d, std::span<const double> x,
                   std::span<const double> w, std::span<const double> dy,
                   std::span<double> gw, std::span<double> gb,
                   std::span<double> dx) {
  if (be == Backend::Serial)
    serial::conv_backward(d, x, w, dy, gw, gb, dx);
  else
    omp::conv_backward(d, x, w, dy, gw, gb, dx);
}

}  // namespace spq::kernels
