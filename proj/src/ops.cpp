// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cswin/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace cswin {

namespace {

thread_local MacTally* g_active_tally = nullptr;

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_to_string(t.shape()));
  }
}

// Strides for iterating slices along one axis.
struct AxisView {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisView axis_view(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw DimensionError("softmax axis " + std::to_string(axis) + " out of range for shape " +
                         shape_to_string(shape));
  }
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
  v.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
  return v;
}

double normal_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

MacTally::MacTally() : previous_(g_active_tally) { g_active_tally = this; }

MacTally::~MacTally() {
  if (previous_) previous_->total_ += total_;
  g_active_tally = previous_;
}

void MacTally::record(std::uint64_t macs) noexcept {
  if (g_active_tally) g_active_tally->total_ += macs;
}

// --- matmul ----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul lhs");
  require_rank(b, 2, "matmul rhs");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
  }
  Tensor c({m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  // i-p-j order: each c[i][j] still accumulates over p ascending.
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = pa[i * k + p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  MacTally::record(static_cast<std::uint64_t>(m) * k * n);
  return c;
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  Tensor t({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

MatmulGrads matmul_backward(const Tensor& a, const Tensor& b, const Tensor& dy) {
  if (dy.rank() != 2 || dy.dim(0) != a.dim(0) || dy.dim(1) != b.dim(1)) {
    throw DimensionError("matmul_backward: upstream " + shape_to_string(dy.shape()) + " does not match output of " +
                         shape_to_string(a.shape()) + " x " + shape_to_string(b.shape()));
  }
  return {matmul(dy, transpose(b)), matmul(transpose(a), dy)};
}

GradPair<MatmulGrads> matmul_with_grad(const Tensor& a, const Tensor& b) {
  return {matmul(a, b), [a, b](const Tensor& dy) { return matmul_backward(a, b, dy); }};
}

// --- softmax ---------------------------------------------------------------

Tensor softmax(const Tensor& x, std::size_t axis) {
  const AxisView v = axis_view(x.shape(), axis);
  Tensor y(x.shape());
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t in = 0; in < v.inner; ++in) {
      const std::size_t base = o * v.len * v.inner + in;
      double mx = x[base];
      for (std::size_t i = 1; i < v.len; ++i) mx = std::max(mx, x[base + i * v.inner]);
      double total = 0.0;
      for (std::size_t i = 0; i < v.len; ++i) {
        const double e = std::exp(x[base + i * v.inner] - mx);
        y[base + i * v.inner] = e;
        total += e;
      }
      for (std::size_t i = 0; i < v.len; ++i) y[base + i * v.inner] /= total;
    }
  }
  return y;
}

Tensor softmax_backward(const Tensor& y, const Tensor& dy, std::size_t axis) {
  require_same_shape(y, dy, "softmax_backward");
  const AxisView v = axis_view(y.shape(), axis);
  Tensor dx(y.shape());
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t in = 0; in < v.inner; ++in) {
      const std::size_t base = o * v.len * v.inner + in;
      double dot = 0.0;
      for (std::size_t i = 0; i < v.len; ++i) dot += y[base + i * v.inner] * dy[base + i * v.inner];
      for (std::size_t i = 0; i < v.len; ++i) {
        const std::size_t idx = base + i * v.inner;
        dx[idx] = y[idx] * (dy[idx] - dot);
      }
    }
  }
  return dx;
}

GradPair<Tensor> softmax_with_grad(const Tensor& x, std::size_t axis) {
  Tensor y = softmax(x, axis);
  return {y, [y, axis](const Tensor& dy) { return softmax_backward(y, dy, axis); }};
}

// --- layer norm ------------------------------------------------------------

namespace {

std::size_t check_layer_norm(const Tensor& x, const Tensor& gamma) {
  const std::size_t c = x.shape().back();
  if (gamma.rank() != 1 || gamma.dim(0) != c) {
    throw DimensionError("layer_norm: affine shape " + shape_to_string(gamma.shape()) +
                         " does not match last dimension of " + shape_to_string(x.shape()));
  }
  return c;
}

}  // namespace

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t c = check_layer_norm(x, gamma);
  require_same_shape(gamma, beta, "layer_norm affine");
  const std::size_t rows = x.numel() / c;
  Tensor y(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data().data() + r * c;
    double mean = 0.0;
    for (std::size_t i = 0; i < c; ++i) mean += xr[i];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t i = 0; i < c; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= static_cast<double>(c);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < c; ++i) y[r * c + i] = (xr[i] - mean) * inv_std * gamma[i] + beta[i];
  }
  return y;
}

LayerNormGrads layer_norm_backward(const Tensor& x, const Tensor& gamma, const Tensor& dy, double eps) {
  const std::size_t c = check_layer_norm(x, gamma);
  require_same_shape(x, dy, "layer_norm_backward");
  const std::size_t rows = x.numel() / c;
  LayerNormGrads g{Tensor(x.shape()), Tensor({c}), Tensor({c})};
  std::vector<double> xhat(c), dxhat(c);
  const double inv_c = 1.0 / static_cast<double>(c);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data().data() + r * c;
    const double* dyr = dy.data().data() + r * c;
    double mean = 0.0;
    for (std::size_t i = 0; i < c; ++i) mean += xr[i];
    mean *= inv_c;
    double var = 0.0;
    for (std::size_t i = 0; i < c; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var *= inv_c;
    const double inv_std = 1.0 / std::sqrt(var + eps);
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
      xhat[i] = (xr[i] - mean) * inv_std;
      dxhat[i] = dyr[i] * gamma[i];
      g.dgamma[i] += dyr[i] * xhat[i];
      g.dbeta[i] += dyr[i];
      mean_dxhat += dxhat[i];
      mean_dxhat_xhat += dxhat[i] * xhat[i];
    }
    mean_dxhat *= inv_c;
    mean_dxhat_xhat *= inv_c;
    for (std::size_t i = 0; i < c; ++i) {
      g.dx[r * c + i] = inv_std * (dxhat[i] - mean_dxhat - xhat[i] * mean_dxhat_xhat);
    }
  }
  return g;
}

GradPair<LayerNormGrads> layer_norm_with_grad(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  return {layer_norm(x, gamma, beta, eps),
          [x, gamma, eps](const Tensor& dy) { return layer_norm_backward(x, gamma, dy, eps); }};
}

// --- gelu ------------------------------------------------------------------

Tensor gelu(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) y[i] = x[i] * normal_cdf(x[i]);
  return y;
}

Tensor gelu_backward(const Tensor& x, const Tensor& dy) {
  require_same_shape(x, dy, "gelu_backward");
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) dx[i] = dy[i] * (normal_cdf(x[i]) + x[i] * normal_pdf(x[i]));
  return dx;
}

GradPair<Tensor> gelu_with_grad(const Tensor& x) {
  return {gelu(x), [x](const Tensor& dy) { return gelu_backward(x, dy); }};
}

// --- bias ------------------------------------------------------------------

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  require_rank(x, 2, "add_row_bias");
  if (bias.rank() != 1 || bias.dim(0) != x.dim(1)) {
    throw DimensionError("add_row_bias: bias " + shape_to_string(bias.shape()) + " vs input " +
                         shape_to_string(x.shape()));
  }
  Tensor y = x;
  const std::size_t n = x.dim(0), d = x.dim(1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) y[i * d + j] += bias[j];
  return y;
}

Tensor sum_rows(const Tensor& dy) {
  require_rank(dy, 2, "sum_rows");
  const std::size_t n = dy.dim(0), d = dy.dim(1);
  Tensor s({d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) s[j] += dy[i * d + j];
  return s;
}

// --- conv2d ----------------------------------------------------------------

std::size_t conv_output_size(std::size_t in, std::size_t kernel, Conv2dGeometry g) {
  if (g.stride == 0) throw GeometryError("conv2d: stride must be positive");
  const std::size_t padded = in + 2 * g.padding;
  if (padded < kernel) {
    throw GeometryError("conv2d: kernel " + std::to_string(kernel) + " larger than padded input " +
                        std::to_string(padded) + " (non-positive output dimension)");
  }
  return (padded - kernel) / g.stride + 1;
}

namespace {

struct ConvDims {
  std::size_t h, w, cin, kh, kw, cout, oh, ow;
};

ConvDims conv_dims(const Tensor& x, const Tensor& kernel, Conv2dGeometry g) {
  require_rank(x, 3, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  if (kernel.dim(2) != x.dim(2)) {
    throw DimensionError("conv2d: kernel " + shape_to_string(kernel.shape()) + " expects " +
                         std::to_string(kernel.dim(2)) + " input channels, input is " + shape_to_string(x.shape()));
  }
  ConvDims d{x.dim(0), x.dim(1), x.dim(2), kernel.dim(0), kernel.dim(1), kernel.dim(3), 0, 0};
  d.oh = conv_output_size(d.h, d.kh, g);
  d.ow = conv_output_size(d.w, d.kw, g);
  return d;
}

// Maps output coordinate + kernel tap to an input coordinate; false for padding.
inline bool input_coord(std::size_t o, std::size_t k, Conv2dGeometry g, std::size_t extent, std::size_t& out) {
  const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(o * g.stride + k) - static_cast<std::ptrdiff_t>(g.padding);
  if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(extent)) return false;
  out = static_cast<std::size_t>(pos);
  return true;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias, Conv2dGeometry g) {
  const ConvDims d = conv_dims(x, kernel, g);
  if (bias.rank() != 1 || bias.dim(0) != d.cout) {
    throw DimensionError("conv2d: bias " + shape_to_string(bias.shape()) + " does not match " +
                         std::to_string(d.cout) + " output channels");
  }
  Tensor y({d.oh, d.ow, d.cout});
  std::vector<double> acc(d.cout);
  for (std::size_t oy = 0; oy < d.oh; ++oy) {
    for (std::size_t ox = 0; ox < d.ow; ++ox) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t ky = 0; ky < d.kh; ++ky) {
        std::size_t iy;
        if (!input_coord(oy, ky, g, d.h, iy)) continue;
        for (std::size_t kx = 0; kx < d.kw; ++kx) {
          std::size_t ix;
          if (!input_coord(ox, kx, g, d.w, ix)) continue;
          const double* xin = x.data().data() + (iy * d.w + ix) * d.cin;
          const double* kin = kernel.data().data() + (ky * d.kw + kx) * d.cin * d.cout;
          for (std::size_t ci = 0; ci < d.cin; ++ci) {
            const double xv = xin[ci];
            const double* krow = kin + ci * d.cout;
            for (std::size_t co = 0; co < d.cout; ++co) acc[co] += xv * krow[co];
          }
        }
      }
      double* out = y.data().data() + (oy * d.ow + ox) * d.cout;
      for (std::size_t co = 0; co < d.cout; ++co) out[co] = acc[co] + bias[co];
    }
  }
  // Padded taps count as multiplications by zero, the usual counter convention.
  MacTally::record(static_cast<std::uint64_t>(d.oh) * d.ow * d.cout * d.kh * d.kw * d.cin);
  return y;
}

Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& kernel, const Tensor& dy, Conv2dGeometry g) {
  const ConvDims d = conv_dims(x, kernel, g);
  if (dy.shape() != Shape{d.oh, d.ow, d.cout}) {
    throw DimensionError("conv2d_backward: upstream " + shape_to_string(dy.shape()) + " does not match output [" +
                         std::to_string(d.oh) + "x" + std::to_string(d.ow) + "x" + std::to_string(d.cout) + "]");
  }
  Conv2dGrads gr{Tensor(x.shape()), Tensor(kernel.shape()), Tensor({d.cout})};
  for (std::size_t oy = 0; oy < d.oh; ++oy) {
    for (std::size_t ox = 0; ox < d.ow; ++ox) {
      const double* g_out = dy.data().data() + (oy * d.ow + ox) * d.cout;
      for (std::size_t co = 0; co < d.cout; ++co) gr.dbias[co] += g_out[co];
      for (std::size_t ky = 0; ky < d.kh; ++ky) {
        std::size_t iy;
        if (!input_coord(oy, ky, g, d.h, iy)) continue;
        for (std::size_t kx = 0; kx < d.kw; ++kx) {
          std::size_t ix;
          if (!input_coord(ox, kx, g, d.w, ix)) continue;
          const std::size_t xbase = (iy * d.w + ix) * d.cin;
          const std::size_t kbase = (ky * d.kw + kx) * d.cin * d.cout;
          for (std::size_t ci = 0; ci < d.cin; ++ci) {
            const double xv = x[xbase + ci];
            double dxv = 0.0;
            for (std::size_t co = 0; co < d.cout; ++co) {
              dxv += kernel[kbase + ci * d.cout + co] * g_out[co];
              gr.dkernel[kbase + ci * d.cout + co] += xv * g_out[co];
            }
            gr.dx[xbase + ci] += dxv;
          }
        }
      }
    }
  }
  return gr;
}

GradPair<Conv2dGrads> conv2d_with_grad(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                                       Conv2dGeometry g) {
  return {conv2d(x, kernel, bias, g),
          [x, kernel, g](const Tensor& dy) { return conv2d_backward(x, kernel, dy, g); }};
}

}  // namespace cswin
