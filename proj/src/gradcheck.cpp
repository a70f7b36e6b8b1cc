// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cswin/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace cswin {

namespace {

double central_difference(const ScalarFn& f, Tensor& x, std::size_t i, double h) {
  const double orig = x[i];
  const double xp = orig + h, xm = orig - h;
  x[i] = xp;
  const double fp = f(x);
  x[i] = xm;
  const double fm = f(x);
  x[i] = orig;
  return (fp - fm) / (xp - xm);
}

}  // namespace

Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double h) {
  Tensor work = x;
  Tensor g(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) g[i] = central_difference(f, work, i, h);
  return g;
}

std::vector<double> finite_diff_grad_at(const ScalarFn& f, const Tensor& x, std::span<const std::size_t> indices,
                                        double h) {
  Tensor work = x;
  std::vector<double> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(central_difference(f, work, i, h));
  return out;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

double max_relative_error(const Tensor& analytic, const Tensor& numeric, double floor) {
  require_same_shape(analytic, numeric, "max_relative_error");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.numel(); ++i) {
    worst = std::max(worst, relative_error(analytic[i], numeric[i], floor));
  }
  return worst;
}

double gradient_error(const Tensor& analytic, const Tensor& numeric) {
  double scale = 0.0;
  for (double v : numeric.values()) scale = std::max(scale, std::abs(v));
  return max_relative_error(analytic, numeric, std::max(kRelErrorFloor, kGradScaleFloor * scale));
}

}  // namespace cswin
