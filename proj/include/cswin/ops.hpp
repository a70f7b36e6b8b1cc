// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>

#include "cswin/tensor.hpp"

namespace cswin {

/// Forward value plus a closure mapping an upstream gradient (shape of
/// `value`) to the gradients of every input and parameter.
template <typename Grads>
struct GradPair {
  Tensor value;
  std::function<Grads(const Tensor& upstream)> grad_fn;
};

// ---------------------------------------------------------------------------
// Multiply-accumulate tally.
//
// Ops that perform multiply-accumulates report them to the innermost active
// MacTally on the calling thread. Used to cross-check the analytic cost model
// against what the numeric kernels actually execute.
class MacTally {
 public:
  MacTally();
  ~MacTally();
  MacTally(const MacTally&) = delete;
  MacTally& operator=(const MacTally&) = delete;

  std::uint64_t total() const noexcept { return total_; }

  static void record(std::uint64_t macs) noexcept;

 private:
  std::uint64_t total_ = 0;
  MacTally* previous_;
};

// ---------------------------------------------------------------------------
// matmul: [m x k] * [k x n]. Each output entry sums over k in ascending order
// starting from +0.0.
Tensor matmul(const Tensor& a, const Tensor& b);

struct MatmulGrads {
  Tensor da;
  Tensor db;
};
MatmulGrads matmul_backward(const Tensor& a, const Tensor& b, const Tensor& dy);
GradPair<MatmulGrads> matmul_with_grad(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

// ---------------------------------------------------------------------------
// softmax along `axis`, max-subtracted.
Tensor softmax(const Tensor& x, std::size_t axis);
/// Gradient w.r.t. the logits given the softmax output `y`.
Tensor softmax_backward(const Tensor& y, const Tensor& dy, std::size_t axis);
GradPair<Tensor> softmax_with_grad(const Tensor& x, std::size_t axis);

// ---------------------------------------------------------------------------
inline constexpr double kLayerNormEps = 1e-5;

/// Normalizes over the last dimension with biased variance, then applies the
/// per-channel affine transform.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = kLayerNormEps);

struct LayerNormGrads {
  Tensor dx;
  Tensor dgamma;
  Tensor dbeta;
};
LayerNormGrads layer_norm_backward(const Tensor& x, const Tensor& gamma, const Tensor& dy,
                                   double eps = kLayerNormEps);
GradPair<LayerNormGrads> layer_norm_with_grad(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                                              double eps = kLayerNormEps);

// ---------------------------------------------------------------------------
/// Exact GELU: x * Phi(x), Phi the standard normal CDF via erf.
Tensor gelu(const Tensor& x);
Tensor gelu_backward(const Tensor& x, const Tensor& dy);
GradPair<Tensor> gelu_with_grad(const Tensor& x);

// ---------------------------------------------------------------------------
/// y[i, j] = x[i, j] + bias[j] for x of shape [n x d].
Tensor add_row_bias(const Tensor& x, const Tensor& bias);
/// Column sums of dy: the bias gradient of add_row_bias.
Tensor sum_rows(const Tensor& dy);

// ---------------------------------------------------------------------------
struct Conv2dGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Output extent of a convolution along one axis; throws GeometryError when it
/// would not be positive.
std::size_t conv_output_size(std::size_t in, std::size_t kernel, Conv2dGeometry g);

/// Cross-correlation of x [H x W x Cin] with kernel [kh x kw x Cin x Cout].
/// Per output element the sum runs kernel-row, kernel-col, in-channel (all
/// ascending) from +0.0, skipping padded taps, then the bias is added.
Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias, Conv2dGeometry g);

struct Conv2dGrads {
  Tensor dx;
  Tensor dkernel;
  Tensor dbias;
};
Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& kernel, const Tensor& dy, Conv2dGeometry g);
GradPair<Conv2dGrads> conv2d_with_grad(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                                       Conv2dGeometry g);

}  // namespace cswin
