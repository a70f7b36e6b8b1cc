// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdint>
#include <numbers>

#include "cswin/gradcheck.hpp"
#include "cswin/init.hpp"
#include "cswin/ops.hpp"
#include "cswin/tensor.hpp"
#include "doctest.h"

using namespace cswin;

namespace {

Tensor randn(const Shape& shape, std::uint64_t seed, std::string_view tag, double std = 1.0) {
  return init_params(shape, derive_seed(Seed{seed}, tag), std);
}

double weighted(const Tensor& y, const Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.numel(); ++i) s += y[i] * w[i];
  return s;
}

Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
  Tensor out({a.dim(0), b.dim(1)});
  for (std::size_t i = 0; i < a.dim(0); ++i) {
    for (std::size_t j = 0; j < b.dim(1); ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < a.dim(1); ++p) acc += a.at(i, p) * b.at(p, j);
      out.at(i, j) = acc;
    }
  }
  return out;
}

Tensor conv_oracle(const Tensor& x, const Tensor& k, const Tensor& bias, std::size_t stride, std::size_t pad) {
  const auto h = static_cast<std::ptrdiff_t>(x.dim(0)), w = static_cast<std::ptrdiff_t>(x.dim(1));
  const std::size_t kh = k.dim(0), kw = k.dim(1), cin = k.dim(2), cout = k.dim(3);
  const std::size_t oh = (x.dim(0) + 2 * pad - kh) / stride + 1, ow = (x.dim(1) + 2 * pad - kw) / stride + 1;
  Tensor out({oh, ow, cout});
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      for (std::size_t co = 0; co < cout; ++co) {
        double acc = 0.0;
        for (std::size_t ky = 0; ky < kh; ++ky) {
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || ix < 0 || iy >= h || ix >= w) continue;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              acc += x.at(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), ci) *
                     k[((ky * kw + kx) * cin + ci) * cout + co];
            }
          }
        }
        out.at(oy, ox, co) = acc + bias[co];
      }
    }
  }
  return out;
}

// Phi(x) from the Maclaurin series of erf, summed until terms vanish.
double phi_series(double x) {
  const double z = x / std::numbers::sqrt2;
  double term = z, total = z;
  for (int n = 1; n < 60; ++n) {
    term *= -z * z / n;
    total += term / (2 * n + 1);
  }
  return 0.5 * (1.0 + 2.0 / std::sqrt(std::numbers::pi) * total);
}

}  // namespace

TEST_CASE("tensor construction and errors") {
  const Tensor t = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(t.shape() == Shape{2, 3});
  CHECK(t.at(1, 2) == 6.0);
  CHECK_THROWS_AS(Tensor(Shape{2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, {1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(t.reshaped({4}), DimensionError);
  CHECK(t.reshaped({3, 2}).at(2, 1) == 6.0);
}

TEST_CASE("matmul examples") {
  const Tensor a = Tensor::matrix({{0.3, -1.5}, {2.25, 7.0}});
  CHECK(matmul(Tensor::matrix({{1, 0}, {0, 1}}), a) == a);
  CHECK(matmul(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::matrix({{0}, {1}})) == Tensor::matrix({{2}, {4}}));
  const Tensor x = randn({3, 4}, 1, "a"), y = randn({4, 5}, 1, "b");
  CHECK(max_abs_diff(matmul(x, y), matmul_oracle(x, y)) == 0.0);
}

TEST_CASE("matmul rejects mismatched shapes and names both") {
  try {
    matmul(Tensor({2, 3}), Tensor({4, 2}));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[4x2]") != std::string::npos);
  }
}

TEST_CASE("matmul associativity on bounded entries") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Tensor a = randn({3, 4}, seed, "a", 5.0), b = randn({4, 2}, seed, "b", 5.0), c = randn({2, 5}, seed, "c", 5.0);
    CHECK(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) < 1e-9);
  }
}

TEST_CASE("softmax examples") {
  CHECK(softmax(Tensor::vector({4.2}), 0)[0] == 1.0);
  const Tensor u = softmax(Tensor::vector({0, 0, 0}), 0);
  for (double v : u.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const Tensor big = softmax(Tensor::vector({1000, 0}), 0);
  CHECK(big.all_finite());
  CHECK(std::abs(big[0] - 1.0) < 1e-300);
  CHECK(big[1] < 1e-300);
}

TEST_CASE("softmax slices sum to one") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Tensor x = randn({3, 5, 4}, seed, "x", 30.0);
    for (std::size_t axis = 0; axis < 3; ++axis) {
      const Tensor y = softmax(x, axis);
      const std::size_t n = x.dim(axis);
      const std::size_t inner = axis == 2 ? 1 : (axis == 1 ? 4 : 20);
      const std::size_t outer = x.numel() / (n * inner);
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
          double s = 0.0;
          for (std::size_t k = 0; k < n; ++k) s += y[(o * n + k) * inner + i];
          CHECK(std::abs(s - 1.0) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("layer_norm examples") {
  const Tensor gamma = Tensor::full({4}, 1.0), beta({4});
  const Tensor out = layer_norm(Tensor::full({2, 4}, 3.5), gamma, beta);
  for (double v : out.values()) CHECK(v == 0.0);
  const Tensor b = Tensor::vector({0.1, -0.2, 0.3, 4.0});
  const Tensor z = layer_norm(randn({3, 4}, 2, "x"), Tensor({4}), b);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 4; ++c) CHECK(z.at(r, c) == b[c]);
  }
}

TEST_CASE("gelu examples") {
  CHECK(gelu(Tensor::vector({0.0}))[0] == 0.0);
  CHECK(std::abs(gelu(Tensor::vector({10.0}))[0] - 10.0) < 1e-9);
  CHECK(std::abs(gelu(Tensor::vector({1.0}))[0] - phi_series(1.0)) < 1e-12);
}

TEST_CASE("conv2d examples") {
  CHECK(conv_output_size(224, 7, {4, 3}) == 56);
  CHECK_THROWS_AS(conv_output_size(2, 7, {1, 0}), GeometryError);
  const Tensor x = randn({5, 4, 3}, 3, "x");
  Tensor eye({1, 1, 3, 3});
  for (std::size_t c = 0; c < 3; ++c) eye[c * 3 + c] = 1.0;
  CHECK(conv2d(x, eye, Tensor({3}), {1, 0}) == x);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor in = randn({6, 6, 2}, seed, "in"), k = randn({3, 3, 2, 3}, seed, "k"), b = randn({3}, seed, "b");
    CHECK(conv2d(in, k, b, {2, 1}) == conv_oracle(in, k, b, 2, 1));
    CHECK(conv2d(in, k, b, {1, 0}) == conv_oracle(in, k, b, 1, 0));
  }
}

TEST_CASE("finite differences") {
  const Tensor x = Tensor::vector({1.0, 2.0});
  const Tensor g = finite_diff_grad([](const Tensor& v) { return v[0] * v[0] + v[1] * v[1]; }, x);
  CHECK(std::abs(g[0] - 2.0) < 1e-8);
  CHECK(std::abs(g[1] - 4.0) < 1e-8);
  const Tensor z = finite_diff_grad([](const Tensor&) { return 7.25; }, randn({6}, 1, "x"));
  for (double v : z.values()) CHECK(std::abs(v) < 1e-10);
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(0.0, 1e-9) == doctest::Approx(1e-2));
}

TEST_CASE("op gradients over 100 seeds") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Tensor a = randn({4, 3}, seed, "a"), b = randn({3, 5}, seed, "b"), wm = randn({4, 5}, seed, "wm");
    const MatmulGrads mg = matmul_with_grad(a, b).grad_fn(wm);
    worst = std::max(worst, gradient_error(mg.da, finite_diff_grad([&](const Tensor& v) {
                                             return weighted(matmul(v, b), wm);
                                           }, a)));
    worst = std::max(worst, gradient_error(mg.db, finite_diff_grad([&](const Tensor& v) {
                                             return weighted(matmul(a, v), wm);
                                           }, b)));

    const Tensor x = randn({4, 6}, seed, "x", 2.0), w = randn({4, 6}, seed, "w");
    for (std::size_t axis = 0; axis < 2; ++axis) {
      worst = std::max(worst, gradient_error(softmax_with_grad(x, axis).grad_fn(w), finite_diff_grad([&](const Tensor& v) {
                                               return weighted(softmax(v, axis), w);
                                             }, x)));
    }
    const Tensor gamma = randn({6}, seed, "g"), beta = randn({6}, seed, "be");
    const LayerNormGrads lg = layer_norm_with_grad(x, gamma, beta).grad_fn(w);
    worst = std::max(worst, gradient_error(lg.dx, finite_diff_grad([&](const Tensor& v) {
                                             return weighted(layer_norm(v, gamma, beta), w);
                                           }, x)));
    worst = std::max(worst, gradient_error(lg.dgamma, finite_diff_grad([&](const Tensor& v) {
                                             return weighted(layer_norm(x, v, beta), w);
                                           }, gamma)));
    worst = std::max(worst, gradient_error(gelu_with_grad(x).grad_fn(w), finite_diff_grad([&](const Tensor& v) {
                                             return weighted(gelu(v), w);
                                           }, x)));

    const Tensor in = randn({4, 4, 2}, seed, "in"), k = randn({3, 3, 2, 2}, seed, "k"), kb = randn({2}, seed, "kb");
    const Tensor wc = randn({2, 2, 2}, seed, "wc");
    const Conv2dGrads cg = conv2d_with_grad(in, k, kb, {2, 1}).grad_fn(wc);
    worst = std::max(worst, gradient_error(cg.dx, finite_diff_grad([&](const Tensor& v) {
                                             return weighted(conv2d(v, k, kb, {2, 1}), wc);
                                           }, in)));
    worst = std::max(worst, gradient_error(cg.dkernel, finite_diff_grad([&](const Tensor& v) {
                                             return weighted(conv2d(in, v, kb, {2, 1}), wc);
                                           }, k)));
  }
  MESSAGE("worst relative error " << worst);
  CHECK(worst < 1e-5);
}

TEST_CASE("init_params") {
  const Tensor a = init_params({3, 4}, Seed{42}), b = init_params({3, 4}, Seed{42});
  CHECK(a == b);
  CHECK_FALSE(a == init_params({3, 4}, Seed{43}));
  CHECK_THROWS_AS(init_params({2}, Seed{1}, 0.0), std::invalid_argument);
  for (double v : a.values()) CHECK(std::abs(v) <= 2 * kDefaultInitStd);
  CHECK(derive_seed(Seed{1}, "head.weight") == derive_seed(Seed{1}, "head.weight"));
  CHECK_FALSE(derive_seed(Seed{1}, "head.weight") == derive_seed(Seed{1}, "head.bias"));
}

TEST_CASE("init_params sample mean") {
  const double std = 0.02;
  const Tensor t = init_params({100000}, Seed{2026}, std);
  CHECK(std::abs(sum(t) / 1e5) < 3 * std / std::sqrt(1e5));
}

TEST_CASE("SplitMix64 reference stream") {
  // Published reference outputs for seed 1234567.
  SplitMix64 g(1234567);
  CHECK(g.next() == 6457827717110365317ULL);
  CHECK(g.next() == 3203168211198807973ULL);
  CHECK(g.next() == 9817491932198370423ULL);
}

TEST_CASE("MacTally nests and folds into the enclosing tally") {
  MacTally tally;
  matmul(Tensor({3, 4}), Tensor({4, 5}));
  CHECK(tally.total() == 60);
  {
    MacTally inner;
    matmul(Tensor({2, 2}), Tensor({2, 2}));
    CHECK(inner.total() == 8);
  }
  CHECK(tally.total() == 68);
}
