// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cswin/attention.hpp"
#include "cswin/gradcheck.hpp"
#include "cswin/init.hpp"
#include "cswin/lepe.hpp"
#include "cswin/ops.hpp"
#include "cswin/parallel.hpp"
#include "cswin/verify.hpp"
#include "doctest.h"

using namespace cswin;

namespace {

Tensor randn(const Shape& shape, std::uint64_t seed, std::string_view tag, double std = 1.0) {
  return init_params(shape, derive_seed(Seed{seed}, tag), std);
}

LePETable random_table(std::size_t tau, std::size_t c, std::uint64_t seed) {
  return LePETable(tau, randn({2 * tau + 1, 2 * tau + 1, c}, seed, "lepe", 0.5));
}

// Element-by-element single-head stripe attention.
Tensor head_oracle(const Tensor& stripe, const Tensor& wq, const Tensor& wk, const Tensor& wv, std::size_t offset,
                   const LePETable* lepe, const std::vector<Coord>& coords) {
  const std::size_t n = stripe.dim(0), c = stripe.dim(1), d = wq.dim(1);
  auto proj = [&](const Tensor& w, std::size_t i, std::size_t k) {
    double acc = 0.0;
    for (std::size_t p = 0; p < c; ++p) acc += stripe.at(i, p) * w.at(p, k);
    return acc;
  };
  Tensor out({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> logits(n);
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += proj(wq, i, k) * proj(wk, j, k);
      logits[j] = dot / std::sqrt(static_cast<double>(d));
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double& l : logits) z += (l = std::exp(l - mx));
    for (std::size_t k = 0; k < d; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double beta = lepe ? lepe_bias(coords[i], coords[j], offset + k, *lepe) : 0.0;
        acc += (logits[j] / z + beta) * proj(wv, j, k);
      }
      out.at(i, k) = acc;
    }
  }
  return out;
}

// Multi-head global attention written as direct sums over positions.
Tensor direct_full_attention(const Tensor& x, std::size_t heads, const HeadProjections& p) {
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2), n = h * w, d = c / heads;
  const Tensor flat = x.reshaped({n, c});
  Tensor concat({n, c});
  for (std::size_t hd = 0; hd < heads; ++hd) {
    const Tensor o = head_oracle(flat, p.wq[hd], p.wk[hd], p.wv[hd], 0, nullptr, {});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < d; ++k) concat.at(i, hd * d + k) = o.at(i, k);
    }
  }
  Tensor out({h, w, c});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < c; ++k) {
      double acc = 0.0;
      for (std::size_t p2 = 0; p2 < c; ++p2) acc += concat.at(i, p2) * p.wo.at(p2, k);
      out[i * c + k] = acc;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("stripe partition examples") {
  Tensor x({4, 4, 1});
  std::iota(x.data().begin(), x.data().end(), 0.0);
  const auto h = stripe_partition(x, 2, Orientation::Horizontal);
  REQUIRE(h.size() == 2);
  CHECK(h[0].shape() == Shape{8, 1});
  for (std::size_t i = 0; i < 8; ++i) CHECK(h[0][i] == static_cast<double>(i));

  const auto v = stripe_partition(x, 2, Orientation::Vertical);
  REQUIRE(v.size() == 2);
  // Column-major inside the stripe: (0,0), (1,0), (2,0), (3,0), (0,1), ...
  const double expect[] = {0, 4, 8, 12, 1, 5, 9, 13};
  for (std::size_t i = 0; i < 8; ++i) CHECK(v[0][i] == expect[i]);

  CHECK(stripe_partition(x, 4, Orientation::Horizontal).size() == 1);
  try {
    stripe_partition(Tensor({4, 6, 1}), 3, Orientation::Horizontal);
    FAIL("expected GeometryError");
  } catch (const GeometryError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("H=4") != std::string::npos);
    CHECK(msg.find("sw=3") != std::string::npos);
  }
}

TEST_CASE("stripe coordinates follow the token order") {
  const auto c = stripe_coordinates(4, 6, 2, Orientation::Vertical, 1);
  REQUIRE(c.size() == 8);
  CHECK(c[0] == Coord{0, 2});
  CHECK(c[1] == Coord{1, 2});
  CHECK(c[4] == Coord{0, 3});
  const auto r = stripe_coordinates(4, 6, 2, Orientation::Horizontal, 1);
  CHECK(r[0] == Coord{2, 0});
  CHECK(r[7] == Coord{3, 1});
}

TEST_CASE("stripe merge inverts partition") {
  Tensor x({6, 4, 3});
  std::iota(x.data().begin(), x.data().end(), 0.0);
  for (auto o : {Orientation::Horizontal, Orientation::Vertical}) {
    for (std::size_t sw : {1, 2}) CHECK(stripe_merge(stripe_partition(x, sw, o), sw, o, 6, 4) == x);
  }
  const auto single = stripe_partition(x, 6, Orientation::Horizontal);
  CHECK(single[0] == x.reshaped({24, 3}));

  // Vertical index map enumerated explicitly on a 6x4 map with sw = 2.
  const auto v = stripe_partition(x, 2, Orientation::Vertical);
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t col = 0; col < 2; ++col) {
      for (std::size_t row = 0; row < 6; ++row) {
        for (std::size_t ch = 0; ch < 3; ++ch) CHECK(v[s].at(col * 6 + row, ch) == x.at(row, s * 2 + col, ch));
      }
    }
  }
}

TEST_CASE("stripe head examples") {
  const Tensor wq = randn({3, 3}, 1, "q"), wk = randn({3, 3}, 1, "k"), wv = randn({3, 3}, 1, "v");
  const Tensor token = randn({1, 3}, 1, "t");
  const LePETable zero(3, 3);
  const std::vector<Coord> one{{0, 0}};
  CHECK(max_abs_diff(stripe_attention_head(token, {wq, wk, wv, 0}, &zero, one), matmul(token, wv)) == 0.0);
  CHECK(stripe_attention_head(Tensor({5, 3}), {wq, wk, wv, 0}, &zero, stripe_coordinates(1, 5, 1, Orientation::Horizontal, 0)) ==
        Tensor({5, 3}));
}

TEST_CASE("stripe head matches a double-loop oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor stripe = randn({6, 4}, seed, "s");
    const Tensor wq = randn({4, 2}, seed, "q", 0.7), wk = randn({4, 2}, seed, "k", 0.7), wv = randn({4, 2}, seed, "v");
    const LePETable lepe = random_table(3, 4, seed);
    const auto coords = stripe_coordinates(2, 3, 2, Orientation::Horizontal, 0);
    const Tensor got = stripe_attention_head(stripe, {wq, wk, wv, 2}, &lepe, coords);
    CHECK(max_abs_diff(got, head_oracle(stripe, wq, wk, wv, 2, &lepe, coords)) < 1e-12);
  }
}

TEST_CASE("attention weights rows sum to one") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor a = attention_weights(randn({7, 3}, seed, "q", 4.0), randn({7, 3}, seed, "k", 4.0));
    for (std::size_t i = 0; i < 7; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 7; ++j) s += a.at(i, j);
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("full attention oracle matches direct summation") {
  const Tensor x = randn({3, 3, 4}, 5, "x");
  const HeadProjections p = HeadProjections::random(4, 2, Seed{5}, 0.5);
  CHECK(max_abs_diff(full_attention_oracle(x, 2, p), direct_full_attention(x, 2, p)) < 1e-12);
}

TEST_CASE("cswin attention small cases") {
  const HeadProjections p = HeadProjections::random(4, 2, Seed{3}, 0.5);
  const Tensor x = randn({1, 1, 4}, 3, "x");
  const AttentionConfig one{1, 1, 4, 2, 1, 3};
  const Tensor v = matmul(x.reshaped({1, 4}), [&] {
    Tensor wv({4, 4});
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t h = 0; h < 2; ++h) {
        for (std::size_t k = 0; k < 2; ++k) wv.at(r, h * 2 + k) = p.wv[h].at(r, k);
      }
    }
    return wv;
  }());
  CHECK(max_abs_diff(cswin_attention(x, one, p, nullptr), matmul(v, p.wo).reshaped({1, 1, 4})) < 1e-15);

  const AttentionConfig cfg{4, 4, 4, 2, 2, 3};
  CHECK(cswin_attention(Tensor({4, 4, 4}), cfg, p, nullptr) == Tensor({4, 4, 4}));
  CHECK(cswin_attention(randn({4, 4, 4}, 1, "x"), cfg, HeadProjections::zeros(4, 2), nullptr) == Tensor({4, 4, 4}));
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS((AttentionConfig{4, 4, 6, 3, 2, 3}.validate()), ConfigError);
  CHECK_THROWS_AS((AttentionConfig{4, 4, 6, 4, 2, 3}.validate()), ConfigError);
  CHECK_THROWS_AS((AttentionConfig{4, 6, 4, 2, 4, 3}.validate()), GeometryError);
  CHECK_NOTHROW((AttentionConfig{4, 6, 4, 2, 2, 3}.validate()));
}

TEST_CASE("sw = H = W equals full attention") {
  for (std::size_t h = 1; h <= 8; ++h) {
    for (std::size_t heads : {2, 4}) {
      const std::size_t c = 2 * heads;
      const Tensor x = randn({h, h, c}, h, "x");
      const HeadProjections p = HeadProjections::random(c, heads, Seed{h}, 0.5);
      const LePETable zero(3, c);
      const AttentionConfig cfg{h, h, c, heads, h, 3};
      const Tensor ref = full_attention_oracle(x, heads, p);
      CHECK(max_abs_diff(cswin_attention(x, cfg, p, &zero), ref) < 1e-10);
      CHECK(max_abs_diff(cswin_attention(x, cfg, p, nullptr), ref) < 1e-10);
    }
  }
}

TEST_CASE("zero LePE table is bit-identical to no positional term") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor x = randn({6, 4, 8}, seed, "x");
    const HeadProjections p = HeadProjections::random(8, 4, Seed{seed}, 0.5);
    const LePETable zero(3, 8);
    const AttentionConfig cfg{6, 4, 8, 4, 2, 3};
    CHECK(cswin_attention(x, cfg, p, &zero) == cswin_attention(x, cfg, p, nullptr));
  }
}

TEST_CASE("cross-shape locality on 6x6") {
  for (std::size_t sw : {1, 2, 3}) {
    const CheckResult r = locality_check(6, sw, Seed{sw});
    INFO(r.detail);
    CHECK(r.passed);
  }
}

TEST_CASE("locality of the analytic backward") {
  // Gradient of one output position w.r.t. inputs vanishes outside its cross.
  const std::size_t n = 6, sw = 2, c = 4;
  const Tensor x = randn({n, n, c}, 4, "x");
  const HeadProjections p = HeadProjections::random(c, 2, Seed{4}, 0.5);
  const LePETable lepe = random_table(3, c, 4);
  const AttentionConfig cfg{n, n, c, 2, sw, 3};
  const auto pair = cswin_attention_with_grad(x, cfg, p, &lepe);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Tensor seed({n, n, c});
      for (std::size_t k = 0; k < c; ++k) seed.at(i, j, k) = 1.0;
      const Tensor dx = pair.grad_fn(seed).dx;
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t q = 0; q < n; ++q) {
          if (r / sw == i / sw || q / sw == j / sw) continue;
          for (std::size_t k = 0; k < c; ++k) CHECK(dx.at(r, q, k) == 0.0);
        }
      }
    }
  }
}

TEST_CASE("within-stripe permutation equivariance") {
  // Head-level: permuting the rows of a stripe permutes the output rows.
  const Tensor stripe = randn({8, 4}, 8, "s");
  const Tensor wq = randn({4, 2}, 8, "q"), wk = randn({4, 2}, 8, "k"), wv = randn({4, 2}, 8, "v");
  const auto coords = stripe_coordinates(2, 4, 2, Orientation::Horizontal, 0);
  const std::vector<std::size_t> perm{3, 7, 0, 5, 1, 6, 2, 4};
  Tensor permuted({8, 4});
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t k = 0; k < 4; ++k) permuted.at(i, k) = stripe.at(perm[i], k);
  }
  const Tensor base = stripe_attention_head(stripe, {wq, wk, wv, 0}, nullptr, coords);
  const Tensor out = stripe_attention_head(permuted, {wq, wk, wv, 0}, nullptr, coords);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t k = 0; k < 2; ++k) CHECK(std::abs(out.at(i, k) - base.at(perm[i], k)) < 1e-12);
  }
}

TEST_CASE("all-horizontal layer without positional term commutes with swaps inside a stripe") {
  const Tensor x = randn({2, 4, 4}, 2, "x");
  const HeadProjections p = HeadProjections::random(4, 2, Seed{2}, 0.5);
  const AttentionConfig cfg{2, 4, 4, 2, 2, 3};
  Tensor swapped = x;
  for (std::size_t k = 0; k < 4; ++k) std::swap(swapped.at(0, 1, k), swapped.at(0, 3, k));
  const auto orient = std::vector<Orientation>(2, Orientation::Horizontal);
  const Tensor a = multihead_stripe_attention(x, cfg, p, nullptr, orient);
  const Tensor b = multihead_stripe_attention(swapped, cfg, p, nullptr, orient);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(std::abs(a.at(0, 1, k) - b.at(0, 3, k)) < 1e-12);
    CHECK(std::abs(a.at(1, 2, k) - b.at(1, 2, k)) < 1e-12);
  }
}

TEST_CASE("head orientation split") {
  const auto o = parallel_head_orientations(6);
  CHECK(std::count(o.begin(), o.begin() + 3, Orientation::Horizontal) == 3);
  CHECK(std::count(o.begin() + 3, o.end(), Orientation::Vertical) == 3);
}

TEST_CASE("sequential grouping differs from parallel grouping") {
  const Tensor x = randn({4, 4, 4}, 1, "x");
  const HeadProjections p = HeadProjections::random(4, 2, Seed{1}, 0.5);
  const AttentionConfig cfg{4, 4, 4, 2, 1, 3};
  CHECK(max_abs_diff(cswin_attention(x, cfg, p, nullptr), sequential_cswin_attention(x, cfg, p, nullptr)) > 1e-3);
}

TEST_CASE("attention results do not depend on the thread count") {
  const Tensor x = randn({8, 8, 16}, 6, "x");
  const HeadProjections p = HeadProjections::random(16, 4, Seed{6}, 0.5);
  const LePETable lepe = random_table(3, 16, 6);
  const AttentionConfig cfg{8, 8, 16, 4, 2, 3};
  set_num_threads(1);
  const Tensor one = cswin_attention(x, cfg, p, &lepe);
  const Tensor w(Shape{8, 8, 16}, std::vector<double>(8 * 8 * 16, 0.25));
  const AttentionGrads g1 = cswin_attention_with_grad(x, cfg, p, &lepe).grad_fn(w);
  set_num_threads(4);
  CHECK(cswin_attention(x, cfg, p, &lepe) == one);
  const AttentionGrads g4 = cswin_attention_with_grad(x, cfg, p, &lepe).grad_fn(w);
  CHECK(g1.dx == g4.dx);
  CHECK(*g1.dtable == *g4.dtable);
  set_num_threads(1);
}

TEST_CASE("cswin attention gradient reduced by sum") {
  const AttentionConfig cfg{4, 4, 4, 2, 2, 3};
  const Tensor x = randn({4, 4, 4}, 11, "x");
  const HeadProjections p = HeadProjections::random(4, 2, Seed{11}, 0.5);
  const LePETable lepe = random_table(3, 4, 11);
  const AttentionGrads g = cswin_attention_with_grad(x, cfg, p, &lepe).grad_fn(Tensor::full({4, 4, 4}, 1.0));
  const Tensor fd = finite_diff_grad([&](const Tensor& v) { return sum(cswin_attention(v, cfg, p, &lepe)); }, x);
  CHECK(gradient_error(g.dx, fd) < 1e-5);
}
