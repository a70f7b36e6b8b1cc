// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>

#include "cswin/tensor.hpp"

namespace cswin {

struct Seed {
  std::uint64_t value = 0;
  friend bool operator==(Seed, Seed) = default;
};

inline constexpr double kDefaultInitStd = 0.02;

/// SplitMix64 (Steele, Lea, Flood). Fixed constants, so streams agree across
/// platforms and languages.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in (0, 1]: top 53 bits, offset by one ulp so log() is safe.
  constexpr double next_unit() noexcept { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// 64-bit FNV-1a over the bytes of `path`.
std::uint64_t path_hash(std::string_view path) noexcept;

/// Seed for the parameter tensor at `path` (e.g. "stages.2.blocks.0.attn.wq.1").
Seed derive_seed(Seed base, std::string_view path) noexcept;

/// Normal(0, std) samples truncated to +-2 std by resampling.
///
/// Each sample is the cosine branch of one Box-Muller pair drawn from
/// SplitMix64(seed): u1, u2 = next_unit(), z = sqrt(-2 ln u1) cos(2 pi u2).
/// Pure in (shape, seed, std). Throws std::invalid_argument unless std > 0.
Tensor init_params(const Shape& shape, Seed seed, double std = kDefaultInitStd);

}  // namespace cswin
