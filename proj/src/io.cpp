// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cswin/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace cswin {

namespace {

constexpr std::uint8_t kMagic[4] = {0x43, 0x53, 0x57, 0x54};

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename U>
U get_le(const std::uint8_t* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_cswt(const Tensor& t, DType dtype) {
  if (t.rank() > std::numeric_limits<std::uint8_t>::max()) throw FormatError("CSWT: rank exceeds 255");
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kCswtVersion);
  out.push_back(static_cast<std::uint8_t>(dtype));
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) throw FormatError("CSWT: dimension exceeds u32");
    put_le(out, static_cast<std::uint32_t>(d));
  }
  const std::size_t width = dtype == DType::F32 ? 4 : 8;
  out.reserve(out.size() + t.numel() * width);
  for (double v : t.data()) {
    if (dtype == DType::F32) {
      put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      put_le(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

Tensor decode_cswt(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 7) throw FormatError("CSWT: truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("CSWT: bad magic bytes");
  if (bytes[4] != kCswtVersion) throw FormatError("CSWT: unsupported version " + std::to_string(bytes[4]));
  const std::uint8_t dtype_byte = bytes[5];
  if (dtype_byte > 1) throw FormatError("CSWT: unknown dtype " + std::to_string(dtype_byte));
  const auto dtype = static_cast<DType>(dtype_byte);
  const std::size_t rank = bytes[6];
  if (rank == 0) throw FormatError("CSWT: rank must be positive");
  std::size_t pos = 7;
  if (bytes.size() < pos + 4 * rank) throw FormatError("CSWT: truncated dimensions");
  Shape shape(rank);
  for (std::size_t i = 0; i < rank; ++i, pos += 4) {
    shape[i] = get_le<std::uint32_t>(bytes.data() + pos);
    if (shape[i] == 0) throw FormatError("CSWT: zero dimension");
  }
  const std::size_t width = dtype == DType::F32 ? 4 : 8;
  const std::size_t n = shape_numel(shape);
  if (bytes.size() - pos != n * width) {
    throw FormatError("CSWT: payload is " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                      std::to_string(n * width) + " for shape " + shape_to_string(shape));
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i, pos += width) {
    data[i] = dtype == DType::F32 ? static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(bytes.data() + pos)))
                                  : std::bit_cast<double>(get_le<std::uint64_t>(bytes.data() + pos));
  }
  return Tensor(std::move(shape), std::move(data));
}

void write_cswt(const std::filesystem::path& path, const Tensor& t, DType dtype) {
  const auto bytes = encode_cswt(t, dtype);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Tensor read_cswt(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  try {
    return decode_cswt(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace cswin
