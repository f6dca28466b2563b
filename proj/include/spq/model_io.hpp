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

#ifndef SPQ_MODEL_IO_HPP_
#define SPQ_MODEL_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spq/model.hpp"

namespace spq {

/// .spqf container, little-endian throughout:
///
///   "SPQF" | u16 version (1) | u16 layer count
///   per layer: u8 kind (0 dense, 1 conv2d, 2 relu)
///              u32 dims (dense: in, out; conv2d: in_ch, out_ch, kernel;
///                        relu: none)
///              u8 encoding (0 dense_f32, 1 sparse_pow2; relu: 0)
///              payload
///
/// dense_f32:   f32 weights (row-major) | f32 bias[out]
/// sparse_pow2: u8 bits | i8 max_exp | u32 count
///              | count LEB128 deltas of the flat indices of nonzero weights
///                (first delta from 0, later deltas >= 1)
///              | count packed b-bit codes, LSB-first, padded to a byte:
///                bit b-1 = sign, low b-1 bits = k; k = 0 is the value 0,
///                k >= 1 is 2^(max_exp - (k - 1))
///              | f32 bias[out]
enum class Encoding : std::uint8_t { DenseF32 = 0, SparsePow2 = 1 };

inline constexpr std::uint16_t kFormatVersion = 1;

/// SparsePow2 requires fully_quantized(model).
std::vector<std::uint8_t> encode_model(const Model& model, Encoding encoding);

/// Throws FormatError on bad magic, version, truncation, trailing bytes,
/// out-of-range codes, or layers that do not chain.
Model decode_model(std::span<const std::uint8_t> bytes);

void save_model(const Model& model, const std::filesystem::path& path,
                Encoding encoding);
Model load_model(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Rounds every weight and bias to the nearest float, i.e. exactly what a
/// dense_f32 round trip keeps.
void round_to_f32(Model& model);

/// Size after DEFLATE (zlib, level 9).
std::size_t measure_compressed(std::span<const std::uint8_t> bytes);
std::size_t measure_compressed(const std::filesystem::path& path);

}  // namespace spq

#endif  // SPQ_MODEL_IO_HPP_
