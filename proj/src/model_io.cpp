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

#include "spq/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cfloat>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include "spq/error.hpp"
#include "spq/quantization.hpp"

namespace spq {

namespace {

constexpr char kMagic[4] = {'S', 'P', 'Q', 'F'};
constexpr std::size_t kMaxDim = std::size_t{1} << 24;
constexpr std::size_t kMaxLayerWeights = std::size_t{1} << 24;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(v & 0xff);
    u8(v >> 8);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8((v >> (8 * i)) & 0xff);
  }
  void f32(double v) {
    const float f = static_cast<float>(v);
    if (!std::isfinite(f))
      throw NumericError("value " + std::to_string(v) + " does not fit in f32");
    u32(std::bit_cast<std::uint32_t>(f));
  }
  void varint(std::uint64_t v) {
    while (v >= 0x80) {
      u8(static_cast<std::uint8_t>(v | 0x80));
      v >>= 7;
    }
    u8(static_cast<std::uint8_t>(v));
  }
  void bytes(const std::vector<std::uint8_t>& b) {
    buf_.insert(buf_.end(), b.begin(), b.end());
  }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::size_t remaining() const { return b_.size() - pos_; }
  std::size_t pos() const { return pos_; }

  std::uint8_t u8() {
    need(1, "u8");
    return b_[pos_++];
  }
  std::uint16_t u16() {
    need(2, "u16");
    const std::uint16_t v = b_[pos_] | (b_[pos_ + 1] << 8);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{b_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  double f32() {
    const float f = std::bit_cast<float>(u32());
    if (!std::isfinite(f))
      throw FormatError("non-finite f32 at byte " + std::to_string(pos_ - 4));
    return static_cast<double>(f);
  }
  std::uint64_t varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      const std::uint8_t byte = u8();
      v |= std::uint64_t{byte & 0x7fu} << shift;
      if (!(byte & 0x80)) return v;
    }
    throw FormatError("varint longer than 64 bits at byte " +
                      std::to_string(pos_));
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n)
      throw FormatError(std::string("truncated container: need ") +
                        std::to_string(n) + " bytes for " + what + " at byte " +
                        std::to_string(pos_) + ", " +
                        std::to_string(remaining()) + " left");
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

int sparse_bits_default(const Model& m) {
  for (const auto& l : m.layers)
    if (l.has_weights() && l.weight.grid) return l.weight.grid->bits;
  return 5;
}

void encode_sparse(Writer& w, const Layer& l, int fallback_bits) {
  const Pow2Grid grid =
      l.weight.grid ? *l.weight.grid : Pow2Grid::from_max_exp(fallback_bits, 0);
  if (grid.max_exp < -128 || grid.max_exp > 127)
    throw NumericError("grid max exponent " + std::to_string(grid.max_exp) +
                       " does not fit in i8");
  const int b = grid.bits;
  std::vector<std::size_t> idx;
  std::vector<std::uint32_t> codes;
  for (std::size_t i = 0; i < l.weight.size(); ++i) {
    const double v = l.weight.effective(i);
    if (v == 0.0) continue;
    int e = 0;
    const double m = std::frexp(std::fabs(v), &e);
    if (m != 0.5 || !grid.contains_exponent(e - 1))
      throw NumericError("sparse_pow2: weight " + std::to_string(i) + " = " +
                         std::to_string(v) + " is not on the layer grid");
    const std::uint32_t k = static_cast<std::uint32_t>(grid.max_exp - (e - 1) + 1);
    const std::uint32_t sign = v < 0.0 ? 1u : 0u;
    idx.push_back(i);
    codes.push_back((sign << (b - 1)) | k);
  }
  w.u8(static_cast<std::uint8_t>(b));
  w.u8(static_cast<std::uint8_t>(static_cast<std::int8_t>(grid.max_exp)));
  w.u32(static_cast<std::uint32_t>(idx.size()));
  std::size_t prev = 0;
  for (std::size_t i : idx) {
    w.varint(i - prev);
    prev = i;
  }
  std::vector<std::uint8_t> packed((codes.size() * b + 7) / 8, 0);
  std::size_t bit = 0;
  for (std::uint32_t c : codes)
    for (int j = 0; j < b; ++j, ++bit)
      if ((c >> j) & 1u) packed[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
  w.bytes(packed);
}

void decode_sparse(Reader& r, Layer& l) {
  const int b = r.u8();
  const int max_exp = static_cast<std::int8_t>(r.u8());
  if (b < 2 || b > 12) throw FormatError("sparse_pow2: bad bit width " + std::to_string(b));
  const Pow2Grid grid = Pow2Grid::from_max_exp(b, max_exp);
  const std::uint32_t count = r.u32();
  const std::size_t n = l.weight.size();
  if (count > n)
    throw FormatError("sparse_pow2: " + std::to_string(count) +
                      " entries for a layer of " + std::to_string(n));
  if (count > r.remaining()) throw FormatError("sparse_pow2: truncated index list");
  std::vector<std::size_t> idx(count);
  std::size_t prev = 0;
  for (std::uint32_t c = 0; c < count; ++c) {
    const std::uint64_t d = r.varint();
    if (c > 0 && d == 0) throw FormatError("sparse_pow2: repeated index");
    if (d >= n || prev + d >= n) throw FormatError("sparse_pow2: index out of range");
    prev += d;
    idx[c] = prev;
  }
  const auto packed = r.take((static_cast<std::size_t>(count) * b + 7) / 8, "codes");
  auto& w = l.weight;
  std::fill(w.gate.begin(), w.gate.end(), std::uint8_t{0});
  w.base.value.fill(0.0);
  std::size_t bit = 0;
  for (std::uint32_t c = 0; c < count; ++c) {
    std::uint32_t code = 0;
    for (int j = 0; j < b; ++j, ++bit)
      code |= ((packed[bit / 8] >> (bit % 8)) & 1u) << j;
    const std::uint32_t k = code & ((1u << (b - 1)) - 1);
    const bool negative = (code >> (b - 1)) & 1u;
    const std::size_t i = idx[c];
    w.gate[i] = 1;
    if (k == 0) {
      w.quant[i] = {QuantState::Kind::QuantizedZero, 0};
      continue;
    }
    if (k > static_cast<std::uint32_t>(grid.exponents_per_sign()))
      throw FormatError("sparse_pow2: exponent index " + std::to_string(k) +
                        " outside the " + std::to_string(b) + "-bit grid");
    const int e = max_exp - static_cast<int>(k - 1);
    const double v = std::ldexp(1.0, e);
    w.base.value[i] = negative ? -v : v;
    w.quant[i] = {QuantState::Kind::Quantized, e};
  }
  w.grid = grid;
  w.scheduled_fraction = 1.0;
}

std::uint32_t dim_u32(std::size_t d) {
  if (d == 0 || d > kMaxDim) throw ShapeError("layer dimension out of range");
  return static_cast<std::uint32_t>(d);
}

std::size_t read_dim(Reader& r) {
  const std::uint32_t d = r.u32();
  if (d == 0 || d > kMaxDim)
    throw FormatError("layer dimension " + std::to_string(d) + " out of range");
  return d;
}

}  // namespace

std::vector<std::uint8_t> encode_model(const Model& model, Encoding encoding) {
  if (model.layers.size() > 0xffff) throw ShapeError("too many layers");
  if (encoding == Encoding::SparsePow2 && !fully_quantized(model))
    throw NumericError("sparse_pow2 needs a fully quantized model");
  const int fallback_bits = sparse_bits_default(model);
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kFormatVersion);
  w.u16(static_cast<std::uint16_t>(model.layers.size()));
  for (const Layer& l : model.layers) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    switch (l.kind) {
      case LayerKind::Dense:
        w.u32(dim_u32(l.in));
        w.u32(dim_u32(l.out));
        break;
      case LayerKind::Conv2d:
        w.u32(dim_u32(l.in));
        w.u32(dim_u32(l.out));
        w.u32(dim_u32(l.kernel));
        break;
      case LayerKind::ReLU:
        w.u8(0);
        continue;
    }
    w.u8(static_cast<std::uint8_t>(encoding));
    if (encoding == Encoding::DenseF32) {
      for (std::size_t i = 0; i < l.weight.size(); ++i) w.f32(l.weight.effective(i));
    } else {
      encode_sparse(w, l, fallback_bits);
    }
    for (double b : l.bias.value.values()) w.f32(b);
  }
  return w.take();
}

Model decode_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw FormatError("bad magic: not an SPQF container");
  const std::uint16_t version = r.u16();
  if (version != kFormatVersion)
    throw FormatError("unsupported container version " + std::to_string(version));
  const std::uint16_t count = r.u16();
  Model m;
  std::optional<std::size_t> prev;  // last weighted layer
  for (std::uint16_t li = 0; li < count; ++li) {
    const std::uint8_t kind = r.u8();
    const std::string at = "layer " + std::to_string(li);
    if (kind == static_cast<std::uint8_t>(LayerKind::ReLU)) {
      if (r.u8() != 0) throw FormatError(at + ": relu with a nonzero encoding");
      m.layers.push_back(make_relu());
      continue;
    }
    if (kind > static_cast<std::uint8_t>(LayerKind::ReLU))
      throw FormatError(at + ": unknown layer kind " + std::to_string(kind));
    const std::size_t in = read_dim(r), out = read_dim(r);
    const std::size_t k = kind == 1 ? read_dim(r) : 1;
    // Checked step by step so corrupted dimensions cannot overflow.
    std::size_t numel = in;
    for (std::size_t f : {out, k, k}) {
      if (numel > kMaxLayerWeights / f) throw FormatError(at + ": layer too large");
      numel *= f;
    }
    if (prev) {
      const Layer& p = m.layers[*prev];
      if (kind == 1 && p.kind == LayerKind::Dense)
        throw FormatError(at + ": conv2d cannot follow a dense layer");
      if (p.kind == static_cast<LayerKind>(kind) && in != p.out)
        throw FormatError(at + ": input width " + std::to_string(in) +
                          " does not match previous output " +
                          std::to_string(p.out));
    }
    const std::uint8_t enc = r.u8();
    if (enc > 1) throw FormatError(at + ": unknown encoding " + std::to_string(enc));
    // Reject truncated payloads before allocating the layer.
    const std::size_t min_payload = enc == 0 ? 4 * (numel + out) : 6 + 4 * out;
    if (r.remaining() < min_payload) throw FormatError(at + ": truncated payload");
    std::vector<double> zeros_w(numel, 0.0), zeros_b(out, 0.0);
    Layer l = kind == 0 ? make_dense(in, out, std::move(zeros_w), std::move(zeros_b))
                        : make_conv2d(in, out, k, std::move(zeros_w), std::move(zeros_b));
    if (enc == 0) {
      if (r.remaining() / 4 < numel) throw FormatError(at + ": truncated weights");
      for (std::size_t i = 0; i < numel; ++i) {
        const double v = r.f32();
        l.weight.base.value[i] = v;
        l.weight.gate[i] = v != 0.0;
      }
    } else {
      decode_sparse(r, l);
    }
    for (std::size_t o = 0; o < out; ++o) l.bias.value[o] = r.f32();
    m.layers.push_back(std::move(l));
    prev = m.layers.size() - 1;
  }
  if (r.remaining() != 0)
    throw FormatError(std::to_string(r.remaining()) +
                      " trailing bytes after the last layer");
  return m;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void save_model(const Model& model, const std::filesystem::path& path,
                Encoding encoding) {
  const auto bytes = encode_model(model, encoding);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  try {
    return decode_model(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void round_to_f32(Model& model) {
  for (auto& l : model.layers) {
    if (!l.has_weights()) continue;
    for (auto& v : l.weight.base.value.values()) v = static_cast<float>(v);
    for (auto& v : l.bias.value.values()) v = static_cast<float>(v);
  }
}

std::size_t measure_compressed(std::span<const std::uint8_t> bytes) {
  uLongf dest_len = compressBound(static_cast<uLong>(bytes.size()));
  std::vector<Bytef> dest(dest_len);
  const int rc = compress2(dest.data(), &dest_len, bytes.data(),
                           static_cast<uLong>(bytes.size()), Z_BEST_COMPRESSION);
  if (rc != Z_OK) throw Error("zlib compress2 failed with code " + std::to_string(rc));
  return dest_len;
}

std::size_t measure_compressed(const std::filesystem::path& path) {
  return measure_compressed(read_file(path));
}

}  // namespace spq
