// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cswin/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cswin/parallel.hpp"

namespace cswin {

const char* to_string(Orientation o) noexcept { return o == Orientation::Horizontal ? "horizontal" : "vertical"; }

void AttentionConfig::validate() const {
  if (height == 0 || width == 0 || channels == 0) throw GeometryError("attention: empty feature map");
  if (heads == 0 || heads % 2 != 0) {
    throw ConfigError("attention: head count must be even and positive, got " + std::to_string(heads));
  }
  if (channels % heads != 0) {
    throw ConfigError("attention: channels " + std::to_string(channels) + " not divisible by heads " +
                      std::to_string(heads));
  }
  if (stripe_width == 0) throw GeometryError("attention: stripe width must be at least 1");
  if (height % stripe_width != 0) {
    throw GeometryError("attention: height H=" + std::to_string(height) + " not divisible by stripe width sw=" +
                        std::to_string(stripe_width));
  }
  if (width % stripe_width != 0) {
    throw GeometryError("attention: width W=" + std::to_string(width) + " not divisible by stripe width sw=" +
                        std::to_string(stripe_width));
  }
}

// --- HeadProjections -------------------------------------------------------

HeadProjections HeadProjections::zeros(std::size_t channels, std::size_t heads) {
  if (heads == 0 || channels % heads != 0) throw ConfigError("HeadProjections: channels not divisible by heads");
  const std::size_t dk = channels / heads;
  HeadProjections p;
  for (std::size_t h = 0; h < heads; ++h) {
    p.wq.emplace_back(Shape{channels, dk});
    p.wk.emplace_back(Shape{channels, dk});
    p.wv.emplace_back(Shape{channels, dk});
  }
  p.wo = Tensor({channels, channels});
  return p;
}

HeadProjections HeadProjections::random(std::size_t channels, std::size_t heads, Seed seed, double std) {
  HeadProjections p = zeros(channels, heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::string i = std::to_string(h);
    p.wq[h] = init_params(p.wq[h].shape(), derive_seed(seed, "wq." + i), std);
    p.wk[h] = init_params(p.wk[h].shape(), derive_seed(seed, "wk." + i), std);
    p.wv[h] = init_params(p.wv[h].shape(), derive_seed(seed, "wv." + i), std);
  }
  p.wo = init_params(p.wo.shape(), derive_seed(seed, "wo"), std);
  return p;
}

void HeadProjections::check(std::size_t channels, std::size_t heads) const {
  if (wq.size() != heads || wk.size() != heads || wv.size() != heads) {
    throw DimensionError("HeadProjections: expected " + std::to_string(heads) + " heads, got " +
                         std::to_string(wq.size()));
  }
  const Shape head_shape{channels, channels / heads};
  for (std::size_t h = 0; h < heads; ++h) {
    for (const Tensor* w : {&wq[h], &wk[h], &wv[h]}) {
      if (w->shape() != head_shape) {
        throw DimensionError("HeadProjections: head " + std::to_string(h) + " projection is " +
                             shape_to_string(w->shape()) + ", expected " + shape_to_string(head_shape));
      }
    }
  }
  if (wo.shape() != Shape{channels, channels}) {
    throw DimensionError("HeadProjections: output projection is " + shape_to_string(wo.shape()) + ", expected [" +
                         std::to_string(channels) + "x" + std::to_string(channels) + "]");
  }
}

HeadProjections& HeadProjections::operator+=(const HeadProjections& other) {
  for (std::size_t h = 0; h < heads(); ++h) {
    wq[h] += other.wq[h];
    wk[h] += other.wk[h];
    wv[h] += other.wv[h];
  }
  wo += other.wo;
  return *this;
}

// --- stripes ---------------------------------------------------------------

Tensor transpose_hw(const Tensor& x) {
  if (x.rank() != 3) throw DimensionError("transpose_hw: expected [H x W x C], got " + shape_to_string(x.shape()));
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  Tensor t({w, h, c});
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      std::copy_n(x.data().data() + (i * w + j) * c, c, t.data().data() + (j * h + i) * c);
  return t;
}

namespace {

void require_divisible(std::size_t extent, std::size_t sw, const char* name) {
  if (sw == 0) throw GeometryError("stripe width must be at least 1");
  if (extent % sw != 0) {
    throw GeometryError(std::string(name) + "=" + std::to_string(extent) + " not divisible by stripe width sw=" +
                        std::to_string(sw));
  }
}

std::vector<Tensor> horizontal_partition(const Tensor& x, std::size_t sw) {
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  const std::size_t count = h / sw, n = sw * w;
  std::vector<Tensor> stripes;
  stripes.reserve(count);
  for (std::size_t m = 0; m < count; ++m) {
    const auto first = x.values().begin() + static_cast<std::ptrdiff_t>(m * n * c);
    stripes.emplace_back(Shape{n, c}, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n * c)));
  }
  return stripes;
}

Tensor horizontal_merge(std::span<const Tensor> stripes, std::size_t sw, std::size_t h, std::size_t w) {
  const std::size_t n = sw * w;
  if (stripes.empty() || stripes.size() != h / sw) {
    throw GeometryError("stripe_merge: expected " + std::to_string(h / sw) + " stripes, got " +
                        std::to_string(stripes.size()));
  }
  if (stripes.front().rank() != 2) {
    throw GeometryError("stripe_merge: stripes must be [n x C], got " + shape_to_string(stripes.front().shape()));
  }
  const std::size_t c = stripes.front().dim(1);
  Tensor x({h, w, c});
  for (std::size_t m = 0; m < stripes.size(); ++m) {
    if (stripes[m].shape() != Shape{n, c}) {
      throw GeometryError("stripe_merge: stripe " + std::to_string(m) + " is " + shape_to_string(stripes[m].shape()) +
                          ", expected [" + std::to_string(n) + "x" + std::to_string(c) + "]");
    }
    std::copy(stripes[m].values().begin(), stripes[m].values().end(), x.data().begin() + static_cast<std::ptrdiff_t>(m * n * c));
  }
  return x;
}

}  // namespace

std::vector<Tensor> stripe_partition(const Tensor& x, std::size_t sw, Orientation orientation) {
  if (x.rank() != 3) throw DimensionError("stripe_partition: expected [H x W x C], got " + shape_to_string(x.shape()));
  if (orientation == Orientation::Horizontal) {
    require_divisible(x.dim(0), sw, "H");
    return horizontal_partition(x, sw);
  }
  require_divisible(x.dim(1), sw, "W");
  return horizontal_partition(transpose_hw(x), sw);
}

Tensor stripe_merge(std::span<const Tensor> stripes, std::size_t sw, Orientation orientation, std::size_t height,
                    std::size_t width) {
  if (orientation == Orientation::Horizontal) {
    require_divisible(height, sw, "H");
    return horizontal_merge(stripes, sw, height, width);
  }
  require_divisible(width, sw, "W");
  return transpose_hw(horizontal_merge(stripes, sw, width, height));
}

std::vector<Coord> stripe_coordinates(std::size_t height, std::size_t width, std::size_t sw,
                                      Orientation orientation, std::size_t index) {
  // Coordinates of the transposed frame map back by swapping row and column.
  const bool vertical = orientation == Orientation::Vertical;
  const std::size_t rows = vertical ? width : height;
  const std::size_t cols = vertical ? height : width;
  require_divisible(rows, sw, vertical ? "W" : "H");
  if (index >= rows / sw) throw GeometryError("stripe index " + std::to_string(index) + " out of range");
  std::vector<Coord> coords;
  coords.reserve(sw * cols);
  for (std::size_t r = index * sw; r < (index + 1) * sw; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto a = static_cast<std::ptrdiff_t>(r), b = static_cast<std::ptrdiff_t>(c);
      coords.push_back(vertical ? Coord{b, a} : Coord{a, b});
    }
  }
  return coords;
}

// --- single head -----------------------------------------------------------

Tensor attention_weights(const Tensor& q, const Tensor& k) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));
  Tensor scores = matmul(q, transpose(k));
  for (double& s : scores.data()) s *= scale;
  return softmax(scores, 1);
}

namespace {

struct HeadForward {
  Tensor q, k, v, alpha, z;
};

void check_stripe(const Tensor& stripe, const HeadSlice& proj, const LePETable* lepe, std::span<const Coord> coords) {
  if (stripe.rank() != 2 || stripe.dim(1) != proj.wq.dim(0)) {
    throw DimensionError("stripe_attention_head: stripe " + shape_to_string(stripe.shape()) +
                         " incompatible with projection " + shape_to_string(proj.wq.shape()));
  }
  if (coords.size() != stripe.dim(0)) {
    throw DimensionError("stripe_attention_head: " + std::to_string(coords.size()) + " coordinates for " +
                         std::to_string(stripe.dim(0)) + " tokens");
  }
  if (lepe && proj.channel_offset + proj.wq.dim(1) > lepe->channels()) {
    throw DimensionError("stripe_attention_head: head channels exceed LePE table channels");
  }
}

HeadForward head_forward(const Tensor& stripe, const HeadSlice& proj, const LePETable* lepe,
                         std::span<const Coord> coords) {
  check_stripe(stripe, proj, lepe, coords);
  HeadForward f{matmul(stripe, proj.wq), matmul(stripe, proj.wk), matmul(stripe, proj.wv), Tensor(), Tensor()};
  f.alpha = attention_weights(f.q, f.k);
  const std::size_t n = stripe.dim(0), dk = proj.wq.dim(1);
  f.z = Tensor({n, dk});
  for (std::size_t c = 0; c < dk; ++c) {
    if (lepe) {
      const Tensor beta = lepe_matrix(coords, proj.channel_offset + c, *lepe);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += (f.alpha[i * n + j] + beta[i * n + j]) * f.v[j * dk + c];
        f.z[i * dk + c] = acc;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += f.alpha[i * n + j] * f.v[j * dk + c];
        f.z[i * dk + c] = acc;
      }
    }
  }
  MacTally::record(static_cast<std::uint64_t>(n) * n * dk);
  return f;
}

StripeHeadGrads head_backward(const Tensor& stripe, const HeadSlice& proj, const LePETable* lepe,
                              std::span<const Coord> coords, const HeadForward& f, const Tensor& dz) {
  const std::size_t n = stripe.dim(0), dk = proj.wq.dim(1);
  if (dz.shape() != Shape{n, dk}) {
    throw DimensionError("stripe_attention_head backward: upstream " + shape_to_string(dz.shape()) +
                         " does not match output [" + std::to_string(n) + "x" + std::to_string(dk) + "]");
  }
  StripeHeadGrads g;
  Tensor dv({n, dk});
  Tensor dalpha = matmul(dz, transpose(f.v));
  if (lepe) g.dtable = Tensor(lepe->table().shape());
  for (std::size_t c = 0; c < dk; ++c) {
    if (lepe) {
      const std::size_t channel = proj.channel_offset + c;
      const Tensor beta = lepe_matrix(coords, channel, *lepe);
      Tensor dbeta({n, n});
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) dbeta[i * n + j] = dz[i * dk + c] * f.v[j * dk + c];
      lepe_matrix_backward(coords, channel, dbeta, *g.dtable, *lepe);
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += (f.alpha[i * n + j] + beta[i * n + j]) * dz[i * dk + c];
        dv[j * dk + c] = acc;
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += f.alpha[i * n + j] * dz[i * dk + c];
        dv[j * dk + c] = acc;
      }
    }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Tensor dscores = softmax_backward(f.alpha, dalpha, 1);
  for (double& s : dscores.data()) s *= scale;
  const Tensor dq = matmul(dscores, f.k);
  const Tensor dk_ = matmul(transpose(dscores), f.q);
  const Tensor stripe_t = transpose(stripe);
  g.dwq = matmul(stripe_t, dq);
  g.dwk = matmul(stripe_t, dk_);
  g.dwv = matmul(stripe_t, dv);
  g.dstripe = matmul(dq, transpose(proj.wq));
  g.dstripe += matmul(dk_, transpose(proj.wk));
  g.dstripe += matmul(dv, transpose(proj.wv));
  return g;
}

}  // namespace

Tensor stripe_attention_head(const Tensor& stripe, const HeadSlice& proj, const LePETable* lepe,
                             std::span<const Coord> coords) {
  return head_forward(stripe, proj, lepe, coords).z;
}

GradPair<StripeHeadGrads> stripe_attention_head_with_grad(const Tensor& stripe, const HeadSlice& proj,
                                                          const LePETable* lepe, std::span<const Coord> coords) {
  HeadForward f = head_forward(stripe, proj, lepe, coords);
  Tensor z = f.z;
  // The closure owns copies of everything it reads.
  std::vector<Coord> coord_copy(coords.begin(), coords.end());
  std::optional<LePETable> lepe_copy;
  if (lepe) lepe_copy = *lepe;
  return {std::move(z), [stripe, wq = proj.wq, wk = proj.wk, wv = proj.wv, offset = proj.channel_offset,
                         lepe_copy = std::move(lepe_copy), coord_copy = std::move(coord_copy),
                         f = std::move(f)](const Tensor& dz) {
            const HeadSlice slice{wq, wk, wv, offset};
            return head_backward(stripe, slice, lepe_copy ? &*lepe_copy : nullptr, coord_copy, f, dz);
          }};
}

// --- multi-head ------------------------------------------------------------

namespace {

struct StripeSet {
  std::vector<Tensor> stripes;
  std::vector<std::vector<Coord>> coords;
};

StripeSet make_stripes(const Tensor& x, const AttentionConfig& cfg, Orientation o) {
  StripeSet s;
  s.stripes = stripe_partition(x, cfg.stripe_width, o);
  for (std::size_t m = 0; m < s.stripes.size(); ++m) {
    s.coords.push_back(stripe_coordinates(cfg.height, cfg.width, cfg.stripe_width, o, m));
  }
  return s;
}

struct MultiheadForward {
  Tensor concat;  // [HW x C]
  std::vector<std::vector<HeadForward>> heads;  // [head][stripe]
  StripeSet horizontal, vertical;
  Tensor y;
};

void check_inputs(const Tensor& x, const AttentionConfig& cfg, const HeadProjections& params, const LePETable* lepe,
                  std::span<const Orientation> orientations) {
  cfg.validate();
  if (x.shape() != Shape{cfg.height, cfg.width, cfg.channels}) {
    throw DimensionError("attention: input " + shape_to_string(x.shape()) + " does not match config [" +
                         std::to_string(cfg.height) + "x" + std::to_string(cfg.width) + "x" +
                         std::to_string(cfg.channels) + "]");
  }
  params.check(cfg.channels, cfg.heads);
  if (orientations.size() != cfg.heads) throw ConfigError("attention: one orientation per head required");
  if (lepe && lepe->channels() != cfg.channels) {
    throw DimensionError("attention: LePE table has " + std::to_string(lepe->channels()) + " channels, layer has " +
                         std::to_string(cfg.channels));
  }
}

MultiheadForward multihead_forward(const Tensor& x, const AttentionConfig& cfg, const HeadProjections& params,
                                   const LePETable* lepe, std::span<const Orientation> orientations) {
  check_inputs(x, cfg, params, lepe, orientations);
  MultiheadForward f;
  const bool any_h = std::find(orientations.begin(), orientations.end(), Orientation::Horizontal) != orientations.end();
  const bool any_v = std::find(orientations.begin(), orientations.end(), Orientation::Vertical) != orientations.end();
  if (any_h) f.horizontal = make_stripes(x, cfg, Orientation::Horizontal);
  if (any_v) f.vertical = make_stripes(x, cfg, Orientation::Vertical);

  const std::size_t dk = cfg.head_dim();
  f.heads.resize(cfg.heads);
  parallel_for(cfg.heads, [&](std::size_t h) {
    const StripeSet& set = orientations[h] == Orientation::Horizontal ? f.horizontal : f.vertical;
    const HeadSlice slice{params.wq[h], params.wk[h], params.wv[h], h * dk};
    auto& out = f.heads[h];
    out.reserve(set.stripes.size());
    for (std::size_t m = 0; m < set.stripes.size(); ++m) {
      out.push_back(head_forward(set.stripes[m], slice, lepe, set.coords[m]));
    }
  });

  const std::size_t tokens = cfg.height * cfg.width;
  f.concat = Tensor({tokens, cfg.channels});
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    std::vector<Tensor> zs;
    zs.reserve(f.heads[h].size());
    for (const auto& hf : f.heads[h]) zs.push_back(hf.z);
    const Tensor merged = stripe_merge(zs, cfg.stripe_width, orientations[h], cfg.height, cfg.width);
    for (std::size_t t = 0; t < tokens; ++t)
      for (std::size_t c = 0; c < dk; ++c) f.concat[t * cfg.channels + h * dk + c] = merged[t * dk + c];
  }
  f.y = matmul(f.concat, params.wo).reshaped({cfg.height, cfg.width, cfg.channels});
  return f;
}

AttentionGrads multihead_backward(const AttentionConfig& cfg, const HeadProjections& params, const LePETable* lepe,
                                  std::span<const Orientation> orientations, const MultiheadForward& f,
                                  const Tensor& dy) {
  if (dy.shape() != f.y.shape()) {
    throw DimensionError("attention backward: upstream " + shape_to_string(dy.shape()) + " does not match output " +
                         shape_to_string(f.y.shape()));
  }
  const std::size_t tokens = cfg.height * cfg.width, dk = cfg.head_dim();
  const Tensor dy2 = dy.reshaped({tokens, cfg.channels});
  AttentionGrads g{Tensor({cfg.height, cfg.width, cfg.channels}), HeadProjections::zeros(cfg.channels, cfg.heads),
                   std::nullopt};
  g.dparams.wo = matmul(transpose(f.concat), dy2);
  const Tensor dconcat = matmul(dy2, transpose(params.wo));
  if (lepe) g.dtable = Tensor(lepe->table().shape());

  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const Orientation o = orientations[h];
    const StripeSet& set = o == Orientation::Horizontal ? f.horizontal : f.vertical;
    Tensor dz_map({cfg.height, cfg.width, dk});
    for (std::size_t t = 0; t < tokens; ++t)
      for (std::size_t c = 0; c < dk; ++c) dz_map[t * dk + c] = dconcat[t * cfg.channels + h * dk + c];
    const std::vector<Tensor> dz_stripes = stripe_partition(dz_map, cfg.stripe_width, o);
    const HeadSlice slice{params.wq[h], params.wk[h], params.wv[h], h * dk};
    std::vector<Tensor> dstripes;
    dstripes.reserve(set.stripes.size());
    for (std::size_t m = 0; m < set.stripes.size(); ++m) {
      StripeHeadGrads sg = head_backward(set.stripes[m], slice, lepe, set.coords[m], f.heads[h][m], dz_stripes[m]);
      g.dparams.wq[h] += sg.dwq;
      g.dparams.wk[h] += sg.dwk;
      g.dparams.wv[h] += sg.dwv;
      if (sg.dtable) *g.dtable += *sg.dtable;
      dstripes.push_back(std::move(sg.dstripe));
    }
    g.dx += stripe_merge(dstripes, cfg.stripe_width, o, cfg.height, cfg.width);
  }
  return g;
}

}  // namespace

Tensor multihead_stripe_attention(const Tensor& x, const AttentionConfig& cfg, const HeadProjections& params,
                                  const LePETable* lepe, std::span<const Orientation> head_orientations) {
  return multihead_forward(x, cfg, params, lepe, head_orientations).y;
}

GradPair<AttentionGrads> multihead_stripe_attention_with_grad(const Tensor& x, const AttentionConfig& cfg,
                                                              const HeadProjections& params, const LePETable* lepe,
                                                              std::span<const Orientation> head_orientations) {
  MultiheadForward f = multihead_forward(x, cfg, params, lepe, head_orientations);
  Tensor y = f.y;
  std::optional<LePETable> lepe_copy;
  if (lepe) lepe_copy = *lepe;
  return {std::move(y),
          [cfg, params, lepe_copy = std::move(lepe_copy),
           orientations = std::vector<Orientation>(head_orientations.begin(), head_orientations.end()),
           f = std::move(f)](const Tensor& dy) {
            return multihead_backward(cfg, params, lepe_copy ? &*lepe_copy : nullptr, orientations, f, dy);
          }};
}

std::vector<Orientation> parallel_head_orientations(std::size_t heads) {
  std::vector<Orientation> o(heads, Orientation::Vertical);
  std::fill_n(o.begin(), heads / 2, Orientation::Horizontal);
  return o;
}

Tensor cswin_attention(const Tensor& x, const AttentionConfig& cfg, const HeadProjections& params,
                       const LePETable* lepe) {
  return multihead_stripe_attention(x, cfg, params, lepe, parallel_head_orientations(cfg.heads));
}

GradPair<AttentionGrads> cswin_attention_with_grad(const Tensor& x, const AttentionConfig& cfg,
                                                   const HeadProjections& params, const LePETable* lepe) {
  return multihead_stripe_attention_with_grad(x, cfg, params, lepe, parallel_head_orientations(cfg.heads));
}

Tensor sequential_cswin_attention(const Tensor& x, const AttentionConfig& cfg, const HeadProjections& params,
                                  const LePETable* lepe) {
  const std::vector<Orientation> h(cfg.heads, Orientation::Horizontal), v(cfg.heads, Orientation::Vertical);
  return multihead_stripe_attention(multihead_stripe_attention(x, cfg, params, lepe, h), cfg, params, lepe, v);
}

GradPair<AttentionGrads> sequential_cswin_attention_with_grad(const Tensor& x, const AttentionConfig& cfg,
                                                              const HeadProjections& params, const LePETable* lepe) {
  const std::vector<Orientation> h(cfg.heads, Orientation::Horizontal), v(cfg.heads, Orientation::Vertical);
  auto first = multihead_stripe_attention_with_grad(x, cfg, params, lepe, h);
  auto second = multihead_stripe_attention_with_grad(first.value, cfg, params, lepe, v);
  Tensor y = second.value;
  return {std::move(y), [b1 = std::move(first.grad_fn), b2 = std::move(second.grad_fn)](const Tensor& dy) {
            AttentionGrads g2 = b2(dy);
            AttentionGrads g1 = b1(g2.dx);
            g1.dparams += g2.dparams;
            if (g1.dtable && g2.dtable) *g1.dtable += *g2.dtable;
            return g1;
          }};
}

Tensor full_attention_oracle(const Tensor& x, std::size_t heads, const HeadProjections& params) {
  if (x.rank() != 3) throw DimensionError("full_attention_oracle: expected [H x W x C], got " + shape_to_string(x.shape()));
  const std::size_t c = x.dim(2);
  if (heads == 0 || c % heads != 0) {
    throw ConfigError("full_attention_oracle: channels " + std::to_string(c) + " not divisible by heads " +
                      std::to_string(heads));
  }
  params.check(c, heads);
  const std::size_t tokens = x.dim(0) * x.dim(1), dk = c / heads;
  const Tensor tok = x.reshaped({tokens, c});
  Tensor concat({tokens, c});
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor v = matmul(tok, params.wv[h]);
    const Tensor z = matmul(attention_weights(matmul(tok, params.wq[h]), matmul(tok, params.wk[h])), v);
    for (std::size_t t = 0; t < tokens; ++t)
      for (std::size_t k = 0; k < dk; ++k) concat[t * c + h * dk + k] = z[t * dk + k];
  }
  return matmul(concat, params.wo).reshaped(x.shape());
}

}  // namespace cswin
