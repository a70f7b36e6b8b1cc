// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace cswin {

/// Worker threads used for independent attention heads. Default 1.
/// Results are bit-identical for every setting: each task writes only its
/// own output slot and reductions happen afterwards in index order.
void set_num_threads(std::size_t n);
std::size_t num_threads() noexcept;

/// Runs fn(i) for i in [0, count), distributing indices over num_threads().
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace cswin
