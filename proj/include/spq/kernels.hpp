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

#ifndef SPQ_KERNELS_HPP_
#define SPQ_KERNELS_HPP_

#include <cstddef>
#include <span>

namespace spq::kernels {

// Every kernel computes each output element with a serial reduction in a
// fixed order. The OpenMP variants only distribute output elements across
// threads, so both variants produce bit-identical results.

struct DenseDims {
  std::size_t batch = 0;
  std::size_t in = 0;
  std::size_t out = 0;
};

// Valid padding, stride 1. Input [batch, in_ch, height, width],
// weight [out_ch, in_ch, kernel, kernel].
struct ConvDims {
  std::size_t batch = 0;
  std::size_t in_ch = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t out_ch = 0;
  std::size_t kernel = 0;

  std::size_t out_h() const { return height - kernel + 1; }
  std::size_t out_w() const { return width - kernel + 1; }
};

enum class Backend { Serial, Parallel };

Backend default_backend();
void set_default_backend(Backend backend);

namespace serial {

void dense_forward(const DenseDims& d, std::span<const double> x,
                   std::span<const double> w, std::span<const double> b,
                   std::span<double> y);
void dense_backward(const DenseDims& d, std::span<const double> x,
                    std::span<const double> w, std::span<const double> dy,
                    std::span<double> gw, std::span<double> gb,
                    std::span<double> dx);
void conv_forward(const ConvDims& d, std::span<const double> x,
                  std::span<const double> w, std::span<const double> b,
                  std::span<double> y);
void conv_backward(const ConvDims& d, std::span<const double> x,
                   std::span<const double> w, std::span<const double> dy,
                   std::span<double> gw, std::span<double> gb,
                   std::span<double> dx);

}  // namespace serial

namespace omp {

void dense_forward(const DenseDims& d, std::span<const double> x,
                   std::span<const double> w, std::span<const double> b,
                   std::span<double> y);
void dense_backward(const DenseDims& d, std::span<const double> x,
                    std::span<const double> w, std::span<const double> dy,
                    std::span<double> gw, std::span<double> gb,
                    std::span<double> dx);
void conv_forward(const ConvDims& d, std::span<const double> x,
                  std::span<const double> w, std::span<const double> b,
                  std::span<double> y);
void conv_backward(const ConvDims& d, std::span<const double> x,
                   std::span<const double> w, std::span<const double> dy,
                   std::span<double> gw, std::span<double> gb,
                   std::span<double> dx);

}  // namespace omp

// Dispatch on the backend.
void dense_forward(Backend be, const DenseDims& d, std::span<const double> x,
                   std::span<const double> w, std::span<const double> b,
                   std::span<double> y);
void dense_backward(Backend be, const DenseDims& d, std::span<const double> x,
                    std::span<const double> w, std::span<const double> dy,
                    std::span<double> gw, std::span<double> gb,
                    std::span<double> dx);
void conv_forward(Backend be, const ConvDims& d, std::span<const double> x,
                  std::span<const double> w, std::span<const double> b,
                  std::span<double> y);
void conv_backward(Backend be, const ConvDims& d, std::span<const double> x,
                   std::span<const double> w, std::span<const double> dy,
                   std::span<double> gw, std::span<double> gb,
                   std::span<double> dx);

}  // namespace spq::kernels

#endif  // SPQ_KERNELS_HPP_
