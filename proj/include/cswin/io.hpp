// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cswin/tensor.hpp"

namespace cswin {

/// On-disk tensor container ("CSWT").
///
///   bytes 0..3   magic 'C' 'S' 'W' 'T'
///   byte  4      version, currently 1
///   byte  5      dtype: 0 = f32, 1 = f64
///   byte  6      rank
///   rank x u32   dimensions, little-endian
///   payload      row-major values, little-endian IEEE-754
enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

inline constexpr std::uint8_t kCswtVersion = 1;

std::vector<std::uint8_t> encode_cswt(const Tensor& t, DType dtype = DType::F64);
/// Throws FormatError on bad magic, version, dtype, truncation or trailing bytes.
Tensor decode_cswt(std::span<const std::uint8_t> bytes);

void write_cswt(const std::filesystem::path& path, const Tensor& t, DType dtype = DType::F64);
/// IoError if the file cannot be read, FormatError if it is malformed.
Tensor read_cswt(const std::filesystem::path& path);

}  // namespace cswin
