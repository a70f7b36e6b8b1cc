// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "cswin/tensor.hpp"

namespace cswin {

/// Token position on the 2-D feature map.
struct Coord {
  std::ptrdiff_t row = 0;
  std::ptrdiff_t col = 0;
  friend bool operator==(Coord, Coord) = default;
};

inline std::ptrdiff_t chebyshev_distance(Coord a, Coord b) noexcept {
  const std::ptrdiff_t dr = a.row > b.row ? a.row - b.row : b.row - a.row;
  const std::ptrdiff_t dc = a.col > b.col ? a.col - b.col : b.col - a.col;
  return dr > dc ? dr : dc;
}

inline constexpr std::size_t kDefaultTau = 3;

/// Learnable per-channel relative-position bias added to attention weights.
///
/// Entry (dr + tau, dc + tau, c) is the bias for query/key offset
/// (dr, dc) = (key - query) on channel c. Offsets with Chebyshev norm above
/// tau carry no entry and contribute exactly zero.
class LePETable {
 public:
  LePETable(std::size_t tau, std::size_t channels);
  /// `table` must have shape [(2 tau + 1) x (2 tau + 1) x channels].
  LePETable(std::size_t tau, Tensor table);

  std::size_t tau() const noexcept { return tau_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t side() const noexcept { return 2 * tau_ + 1; }

  const Tensor& table() const noexcept { return table_; }
  Tensor& table() noexcept { return table_; }

  /// Flat index into table() for an in-range offset.
  std::size_t index(std::ptrdiff_t drow, std::ptrdiff_t dcol, std::size_t channel) const noexcept {
    const auto t = static_cast<std::ptrdiff_t>(tau_);
    return (static_cast<std::size_t>(drow + t) * side() + static_cast<std::size_t>(dcol + t)) * channels_ + channel;
  }

  bool in_range(std::ptrdiff_t drow, std::ptrdiff_t dcol) const noexcept {
    const auto t = static_cast<std::ptrdiff_t>(tau_);
    return drow >= -t && drow <= t && dcol >= -t && dcol <= t;
  }

 private:
  std::size_t tau_;
  std::size_t channels_;
  Tensor table_;
};

/// beta for (query i, key j, channel); zero beyond the Chebyshev radius.
double lepe_bias(Coord pos_i, Coord pos_j, std::size_t channel, const LePETable& table);

/// Dense [n x n] beta matrix over a stripe's token coordinates.
Tensor lepe_matrix(std::span<const Coord> coords, std::size_t channel, const LePETable& table);

/// Adds the gradient of lepe_matrix to `dtable` given dL/dbeta [n x n].
/// Entries never referenced by `coords` are left untouched.
void lepe_matrix_backward(std::span<const Coord> coords, std::size_t channel, const Tensor& dbeta,
                          Tensor& dtable, const LePETable& table);

}  // namespace cswin
