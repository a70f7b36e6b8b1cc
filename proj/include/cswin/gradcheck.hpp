// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>

#include "cswin/tensor.hpp"

namespace cswin {

using ScalarFn = std::function<double(const Tensor&)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every element.
Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double h = 1e-6);

/// Same, restricted to the listed flat indices. Returns one value per index.
std::vector<double> finite_diff_grad_at(const ScalarFn& f, const Tensor& x, std::span<const std::size_t> indices,
                                        double h = 1e-6);

/// Denominator floor of relative_error. Below it the comparison is absolute.
inline constexpr double kRelErrorFloor = 1e-7;

/// |a - b| / max(|a|, |b|, floor).
double relative_error(double analytic, double numeric, double floor = kRelErrorFloor);

/// Worst elementwise relative_error; shapes must match.
double max_relative_error(const Tensor& analytic, const Tensor& numeric, double floor = kRelErrorFloor);

/// Floor of gradient_error as a fraction of the largest finite-difference entry.
inline constexpr double kGradScaleFloor = 1e-3;

/// max_relative_error with floor max(kRelErrorFloor, kGradScaleFloor * max|numeric|).
/// Central differences at h = 1e-6 carry absolute noise near 1e-10 |f|, so
/// entries far below the gradient's own scale are judged against that scale.
double gradient_error(const Tensor& analytic, const Tensor& numeric);

}  // namespace cswin
