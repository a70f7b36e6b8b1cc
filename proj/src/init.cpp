// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cswin/init.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cswin {

std::uint64_t path_hash(std::string_view path) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : path) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

Seed derive_seed(Seed base, std::string_view path) noexcept {
  // One SplitMix64 step decorrelates neighbouring base seeds.
  SplitMix64 mix(base.value ^ path_hash(path));
  return Seed{mix.next()};
}

Tensor init_params(const Shape& shape, Seed seed, double std) {
  if (!(std > 0.0) || !std::isfinite(std)) throw std::invalid_argument("init_params: std must be positive and finite");
  Tensor t(shape);
  SplitMix64 rng(seed.value);
  for (double& v : t.data()) {
    double z;
    do {
      const double u1 = rng.next_unit();
      const double u2 = rng.next_unit();
      z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    } while (std::abs(z) > 2.0);
    v = z * std;
  }
  return t;
}

}  // namespace cswin
