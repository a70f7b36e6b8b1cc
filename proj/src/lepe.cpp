// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cswin/lepe.hpp"

namespace cswin {

LePETable::LePETable(std::size_t tau, std::size_t channels)
    : tau_(tau), channels_(channels), table_({2 * tau + 1, 2 * tau + 1, channels}) {}

LePETable::LePETable(std::size_t tau, Tensor table) : tau_(tau), channels_(0), table_(std::move(table)) {
  if (table_.rank() != 3 || table_.dim(0) != side() || table_.dim(1) != side()) {
    throw DimensionError("LePE table for tau=" + std::to_string(tau) + " must be [" + std::to_string(side()) + "x" +
                         std::to_string(side()) + "xC], got " + shape_to_string(table_.shape()));
  }
  channels_ = table_.dim(2);
}

double lepe_bias(Coord pos_i, Coord pos_j, std::size_t channel, const LePETable& table) {
  if (channel >= table.channels()) {
    throw DimensionError("lepe_bias: channel " + std::to_string(channel) + " out of range for " +
                         std::to_string(table.channels()) + " channels");
  }
  const std::ptrdiff_t dr = pos_j.row - pos_i.row;
  const std::ptrdiff_t dc = pos_j.col - pos_i.col;
  if (!table.in_range(dr, dc)) return 0.0;
  return table.table()[table.index(dr, dc, channel)];
}

Tensor lepe_matrix(std::span<const Coord> coords, std::size_t channel, const LePETable& table) {
  const std::size_t n = coords.size();
  Tensor beta({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) beta[i * n + j] = lepe_bias(coords[i], coords[j], channel, table);
  return beta;
}

void lepe_matrix_backward(std::span<const Coord> coords, std::size_t channel, const Tensor& dbeta,
                          Tensor& dtable, const LePETable& table) {
  const std::size_t n = coords.size();
  if (dbeta.shape() != Shape{n, n}) {
    throw DimensionError("lepe_matrix_backward: expected [" + std::to_string(n) + "x" + std::to_string(n) +
                         "], got " + shape_to_string(dbeta.shape()));
  }
  require_same_shape(dtable, table.table(), "lepe_matrix_backward");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::ptrdiff_t dr = coords[j].row - coords[i].row;
      const std::ptrdiff_t dc = coords[j].col - coords[i].col;
      if (table.in_range(dr, dc)) dtable[table.index(dr, dc, channel)] += dbeta[i * n + j];
    }
  }
}

}  // namespace cswin
