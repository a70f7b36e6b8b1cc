// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cswin/backbone.hpp"

#include <algorithm>

namespace cswin {

// --- configuration ---------------------------------------------------------

std::size_t ModelConfig::effective_stripe_width(std::size_t stage, std::size_t resolution) const noexcept {
  return std::min(stripe_widths[stage], std::max<std::size_t>(stage_resolution(stage, resolution), 1));
}

void ModelConfig::validate(std::size_t resolution) const {
  if (base_dim == 0) throw ConfigError("base_dim must be positive");
  if (mlp_ratio == 0) throw ConfigError("mlp_ratio must be positive");
  if (num_classes == 0) throw ConfigError("num_classes must be positive");
  if (resolution == 0 || resolution % 4 != 0) {
    throw GeometryError("token embedding: input size " + std::to_string(resolution) +
                        " is not divisible by 4 (stride-4 embedding)");
  }
  for (std::size_t s = 0; s < kStages; ++s) {
    const std::string where = "stage " + std::to_string(s + 1) + ": ";
    const std::size_t res = stage_resolution(s, resolution);
    if (res == 0) throw GeometryError(where + "feature map vanished at input size " + std::to_string(resolution));
    if (blocks_per_stage[s] == 0) throw ConfigError(where + "needs at least one block");
    const std::size_t heads = heads_per_stage[s];
    if (heads == 0 || heads % 2 != 0) {
      throw ConfigError(where + "head count " + std::to_string(heads) + " must be even and positive");
    }
    if (stage_dim(s) % heads != 0) {
      throw ConfigError(where + "dim " + std::to_string(stage_dim(s)) + " not divisible by " + std::to_string(heads) +
                        " heads");
    }
    if (stripe_widths[s] == 0) throw ConfigError(where + "stripe width must be at least 1");
    const std::size_t sw = effective_stripe_width(s, resolution);
    if (res % sw != 0) {
      throw GeometryError(where + "token grid " + std::to_string(res) + "x" + std::to_string(res) +
                          " not divisible by stripe width sw=" + std::to_string(sw));
    }
    if (s + 1 < kStages && res % 2 != 0) {
      throw GeometryError(where + "token grid " + std::to_string(res) + " is odd; the stride-2 transition needs even sides");
    }
  }
}

ModelConfig builtin_variant(std::string_view name) {
  ModelConfig c;
  c.stripe_widths = {1, 2, 7, 7};
  if (name == "T") {
    c.base_dim = 64;
    c.blocks_per_stage = {1, 2, 21, 1};
    c.heads_per_stage = {2, 4, 8, 16};
  } else if (name == "S") {
    c.base_dim = 64;
    c.blocks_per_stage = {2, 4, 32, 2};
    c.heads_per_stage = {2, 4, 8, 16};
  } else if (name == "B") {
    c.base_dim = 96;
    c.blocks_per_stage = {2, 4, 32, 2};
    c.heads_per_stage = {4, 8, 16, 32};
  } else if (name == "L") {
    c.base_dim = 144;
    c.blocks_per_stage = {2, 4, 32, 2};
    c.heads_per_stage = {6, 12, 24, 48};
  } else {
    throw ConfigError("unknown variant '" + std::string(name) + "'; valid names: T, S, B, L");
  }
  return c;
}

ModelConfig desk_config() {
  ModelConfig c;
  c.base_dim = 16;
  c.blocks_per_stage = {1, 1, 1, 1};
  c.stripe_widths = {1, 2, 2, 2};
  c.heads_per_stage = {2, 2, 2, 2};
  c.num_classes = 10;
  c.input_size = 32;
  return c;
}

ModelConfig named_config(std::string_view name) {
  if (name == "desk") return desk_config();
  try {
    return builtin_variant(name);
  } catch (const ConfigError&) {
    throw ConfigError("unknown variant '" + std::string(name) + "'; valid names: T, S, B, L, desk");
  }
}

// --- parameters ------------------------------------------------------------

namespace {

LayerNormParams layer_norm_params(std::size_t d) { return {Tensor({d}), Tensor({d})}; }

BlockParams zero_block(std::size_t d, std::size_t heads, std::size_t mlp_ratio, std::size_t tau) {
  return BlockParams{layer_norm_params(d),
                HeadProjections::zeros(d, heads),
                LePETable(tau, d),
                layer_norm_params(d),
                {Tensor({d, d * mlp_ratio}), Tensor({d * mlp_ratio})},
                {Tensor({d * mlp_ratio, d}), Tensor({d})}};
}

}  // namespace

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  ModelParams p;
  const std::size_t c = cfg.base_dim;
  p.embed = {Tensor({kEmbedKernel, kEmbedKernel, 3, c}), Tensor({c})};
  p.embed_norm = layer_norm_params(c);
  for (std::size_t s = 0; s < kStages; ++s) {
    const std::size_t d = cfg.stage_dim(s);
    for (std::size_t b = 0; b < cfg.blocks_per_stage[s]; ++b) {
      p.stages[s].push_back(zero_block(d, cfg.heads_per_stage[s], cfg.mlp_ratio, cfg.tau));
    }
    if (s + 1 < kStages) p.transitions[s] = {Tensor({kTransitionKernel, kTransitionKernel, d, 2 * d}), Tensor({2 * d})};
  }
  const std::size_t last = cfg.stage_dim(kStages - 1);
  p.norm = layer_norm_params(last);
  p.head = {Tensor({last, cfg.num_classes}), Tensor({cfg.num_classes})};
  return p;
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Tensor& t) { n += t.numel(); });
  return n;
}

ModelParams& ModelParams::operator+=(const ModelParams& other) {
  std::vector<const Tensor*> theirs;
  other.for_each([&](const std::string&, const Tensor& t) { theirs.push_back(&t); });
  std::size_t i = 0;
  for_each([&](const std::string& path, Tensor& t) {
    if (i >= theirs.size()) throw DimensionError("ModelParams +=: structure mismatch at " + path);
    t += *theirs[i++];
  });
  if (i != theirs.size()) throw DimensionError("ModelParams +=: structure mismatch");
  return *this;
}

ModelParams init_model(const ModelConfig& cfg, Seed seed, double std) {
  cfg.validate();
  ModelParams p = ModelParams::zeros(cfg);
  auto ends_with = [](const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  p.for_each([&](const std::string& path, Tensor& t) {
    if (ends_with(path, ".gamma")) {
      t.fill(1.0);
    } else if (ends_with(path, ".bias") || ends_with(path, ".beta") || ends_with(path, "lepe.table")) {
      t.fill(0.0);
    } else {
      t = init_params(t.shape(), derive_seed(seed, path), std);
    }
  });
  return p;
}

// --- blocks ----------------------------------------------------------------

Tensor token_embed(const Tensor& image, const ConvParams& conv, const LayerNormParams& norm) {
  if (image.rank() != 3) throw DimensionError("token_embed: expected [H x W x 3], got " + shape_to_string(image.shape()));
  if (image.dim(0) % 4 != 0 || image.dim(1) % 4 != 0) {
    throw GeometryError("token_embed: input " + std::to_string(image.dim(0)) + "x" + std::to_string(image.dim(1)) +
                        " is not divisible by 4");
  }
  return layer_norm(conv2d(image, conv.kernel, conv.bias, kEmbedConv), norm.gamma, norm.beta);
}

GradPair<EmbedGrads> token_embed_with_grad(const Tensor& image, const ConvParams& conv, const LayerNormParams& norm) {
  if (image.rank() != 3) throw DimensionError("token_embed: expected [H x W x 3], got " + shape_to_string(image.shape()));
  if (image.dim(0) % 4 != 0 || image.dim(1) % 4 != 0) {
    throw GeometryError("token_embed: input " + std::to_string(image.dim(0)) + "x" + std::to_string(image.dim(1)) +
                        " is not divisible by 4");
  }
  auto c = conv2d_with_grad(image, conv.kernel, conv.bias, kEmbedConv);
  auto n = layer_norm_with_grad(c.value, norm.gamma, norm.beta);
  Tensor y = n.value;
  return {std::move(y), [cb = std::move(c.grad_fn), nb = std::move(n.grad_fn)](const Tensor& dy) {
            LayerNormGrads ng = nb(dy);
            Conv2dGrads cg = cb(ng.dx);
            return EmbedGrads{std::move(cg.dx), {std::move(cg.dkernel), std::move(cg.dbias)},
                              {std::move(ng.dgamma), std::move(ng.dbeta)}};
          }};
}

namespace {

void check_block_input(const Tensor& x, const AttentionConfig& cfg) {
  if (x.shape() != Shape{cfg.height, cfg.width, cfg.channels}) {
    throw DimensionError("cswin_block: input " + shape_to_string(x.shape()) + " does not match [" +
                         std::to_string(cfg.height) + "x" + std::to_string(cfg.width) + "x" +
                         std::to_string(cfg.channels) + "]");
  }
}

}  // namespace

Tensor cswin_block(const Tensor& x, const AttentionConfig& cfg, const BlockParams& p) {
  check_block_input(x, cfg);
  const std::size_t tokens = cfg.height * cfg.width;
  Tensor xh = x + cswin_attention(layer_norm(x, p.norm1.gamma, p.norm1.beta), cfg, p.attn, &p.lepe);
  const Tensor n2 = layer_norm(xh, p.norm2.gamma, p.norm2.beta).reshaped({tokens, cfg.channels});
  const Tensor hidden = gelu(add_row_bias(matmul(n2, p.fc1.weight), p.fc1.bias));
  const Tensor mlp = add_row_bias(matmul(hidden, p.fc2.weight), p.fc2.bias);
  xh += mlp.reshaped(x.shape());
  return xh;
}

GradPair<BlockGrads> cswin_block_with_grad(const Tensor& x, const AttentionConfig& cfg, const BlockParams& p) {
  check_block_input(x, cfg);
  const std::size_t tokens = cfg.height * cfg.width;
  auto ln1 = layer_norm_with_grad(x, p.norm1.gamma, p.norm1.beta);
  auto att = cswin_attention_with_grad(ln1.value, cfg, p.attn, &p.lepe);
  Tensor xh = x + att.value;
  auto ln2 = layer_norm_with_grad(xh, p.norm2.gamma, p.norm2.beta);
  const Tensor n2 = ln2.value.reshaped({tokens, cfg.channels});
  Tensor pre = add_row_bias(matmul(n2, p.fc1.weight), p.fc1.bias);
  Tensor hidden = gelu(pre);
  const Tensor mlp = add_row_bias(matmul(hidden, p.fc2.weight), p.fc2.bias);
  Tensor out = xh + mlp.reshaped(x.shape());

  return {std::move(out), [cfg, p, tokens, ln1b = std::move(ln1.grad_fn), attb = std::move(att.grad_fn),
                           ln2b = std::move(ln2.grad_fn), n2, pre = std::move(pre),
                           hidden = std::move(hidden)](const Tensor& dy) {
            const Shape map{cfg.height, cfg.width, cfg.channels};
            BlockGrads g{Tensor(map), p};
            const Tensor dmlp = dy.reshaped({tokens, cfg.channels});
            g.dparams.fc2.bias = sum_rows(dmlp);
            g.dparams.fc2.weight = matmul(transpose(hidden), dmlp);
            const Tensor dpre = gelu_backward(pre, matmul(dmlp, transpose(p.fc2.weight)));
            g.dparams.fc1.bias = sum_rows(dpre);
            g.dparams.fc1.weight = matmul(transpose(n2), dpre);
            const Tensor dn2 = matmul(dpre, transpose(p.fc1.weight)).reshaped(map);
            LayerNormGrads l2 = ln2b(dn2);
            g.dparams.norm2 = {std::move(l2.dgamma), std::move(l2.dbeta)};
            Tensor dxh = dy + l2.dx;

            AttentionGrads ag = attb(dxh);
            g.dparams.attn = std::move(ag.dparams);
            g.dparams.lepe.table() = std::move(*ag.dtable);
            LayerNormGrads l1 = ln1b(ag.dx);
            g.dparams.norm1 = {std::move(l1.dgamma), std::move(l1.dbeta)};
            g.dx = std::move(dxh);
            g.dx += l1.dx;
            return g;
          }};
}

namespace {

void check_transition_input(const Tensor& x, const ConvParams& conv) {
  if (x.rank() != 3) throw DimensionError("stage_transition: expected [H x W x D], got " + shape_to_string(x.shape()));
  if (x.dim(0) % 2 != 0 || x.dim(1) % 2 != 0) {
    throw GeometryError("stage_transition: token grid " + std::to_string(x.dim(0)) + "x" + std::to_string(x.dim(1)) +
                        " has an odd side");
  }
  if (conv.kernel.rank() != 4 || conv.kernel.dim(3) != 2 * x.dim(2)) {
    throw DimensionError("stage_transition: kernel " + shape_to_string(conv.kernel.shape()) + " must map " +
                         std::to_string(x.dim(2)) + " to " + std::to_string(2 * x.dim(2)) + " channels");
  }
}

}  // namespace

Tensor stage_transition(const Tensor& x, const ConvParams& conv) {
  check_transition_input(x, conv);
  return conv2d(x, conv.kernel, conv.bias, kTransitionConv);
}

GradPair<TransitionGrads> stage_transition_with_grad(const Tensor& x, const ConvParams& conv) {
  check_transition_input(x, conv);
  auto c = conv2d_with_grad(x, conv.kernel, conv.bias, kTransitionConv);
  Tensor y = c.value;
  return {std::move(y), [cb = std::move(c.grad_fn)](const Tensor& dy) {
            Conv2dGrads g = cb(dy);
            return TransitionGrads{std::move(g.dx), {std::move(g.dkernel), std::move(g.dbias)}};
          }};
}

AttentionConfig stage_attention_config(const ModelConfig& cfg, std::size_t stage, std::size_t resolution) {
  const std::size_t res = ModelConfig::stage_resolution(stage, resolution);
  return AttentionConfig{res, res, cfg.stage_dim(stage), cfg.heads_per_stage[stage],
                         cfg.effective_stripe_width(stage, resolution), cfg.tau};
}

// --- whole model -----------------------------------------------------------

namespace {

std::size_t check_image(const Tensor& image, const ModelConfig& cfg) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw DimensionError("forward: image must be [H x W x 3], got " + shape_to_string(image.shape()));
  }
  if (image.dim(0) != image.dim(1)) {
    throw GeometryError("forward: square images only, got " + std::to_string(image.dim(0)) + "x" +
                        std::to_string(image.dim(1)));
  }
  cfg.validate(image.dim(0));
  return image.dim(0);
}

template <typename Fn>
auto with_location(std::size_t stage, std::size_t block, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const GeometryError& e) {
    throw GeometryError("stage " + std::to_string(stage + 1) + " block " + std::to_string(block) + ": " + e.what());
  }
}

Tensor mean_pool(const Tensor& x) {
  const std::size_t d = x.shape().back();
  const std::size_t tokens = x.numel() / d;
  Tensor pooled({1, d});
  for (std::size_t t = 0; t < tokens; ++t)
    for (std::size_t c = 0; c < d; ++c) pooled[c] += x[t * d + c];
  for (double& v : pooled.data()) v /= static_cast<double>(tokens);
  return pooled;
}

}  // namespace

Tensor forward(const Tensor& image, const ModelConfig& cfg, const ModelParams& params) {
  const std::size_t resolution = check_image(image, cfg);
  Tensor x = token_embed(image, params.embed, params.embed_norm);
  for (std::size_t s = 0; s < kStages; ++s) {
    const AttentionConfig acfg = stage_attention_config(cfg, s, resolution);
    for (std::size_t b = 0; b < params.stages[s].size(); ++b) {
      x = with_location(s, b, [&] { return cswin_block(x, acfg, params.stages[s][b]); });
    }
    if (s + 1 < kStages) x = stage_transition(x, params.transitions[s]);
  }
  const Tensor pooled = mean_pool(layer_norm(x, params.norm.gamma, params.norm.beta));
  return add_row_bias(matmul(pooled, params.head.weight), params.head.bias).reshaped({cfg.num_classes});
}

GradPair<ModelGrads> forward_with_grad(const Tensor& image, const ModelConfig& cfg, const ModelParams& params) {
  const std::size_t resolution = check_image(image, cfg);
  auto embed = token_embed_with_grad(image, params.embed, params.embed_norm);
  Tensor x = embed.value;
  std::array<std::vector<std::function<BlockGrads(const Tensor&)>>, kStages> block_back;
  std::array<std::function<TransitionGrads(const Tensor&)>, kStages - 1> trans_back;
  for (std::size_t s = 0; s < kStages; ++s) {
    const AttentionConfig acfg = stage_attention_config(cfg, s, resolution);
    for (std::size_t b = 0; b < params.stages[s].size(); ++b) {
      auto blk = with_location(s, b, [&] { return cswin_block_with_grad(x, acfg, params.stages[s][b]); });
      x = std::move(blk.value);
      block_back[s].push_back(std::move(blk.grad_fn));
    }
    if (s + 1 < kStages) {
      auto tr = stage_transition_with_grad(x, params.transitions[s]);
      x = std::move(tr.value);
      trans_back[s] = std::move(tr.grad_fn);
    }
  }
  auto norm = layer_norm_with_grad(x, params.norm.gamma, params.norm.beta);
  const Tensor pooled = mean_pool(norm.value);
  Tensor logits = add_row_bias(matmul(pooled, params.head.weight), params.head.bias).reshaped({cfg.num_classes});
  const Shape final_shape = x.shape();

  return {std::move(logits),
          [cfg, params, pooled, final_shape, eb = std::move(embed.grad_fn), block_back = std::move(block_back),
           trans_back = std::move(trans_back), nb = std::move(norm.grad_fn)](const Tensor& dlogits) {
            if (dlogits.numel() != cfg.num_classes) {
              throw DimensionError("forward backward: upstream " + shape_to_string(dlogits.shape()) +
                                   " does not match logits [" + std::to_string(cfg.num_classes) + "]");
            }
            ModelGrads g{Tensor(), ModelParams::zeros(cfg)};
            const Tensor dl = dlogits.reshaped({1, cfg.num_classes});
            g.dparams.head = {matmul(transpose(pooled), dl), sum_rows(dl)};
            const Tensor dpooled = matmul(dl, transpose(params.head.weight));
            const std::size_t d = final_shape.back();
            const std::size_t tokens = shape_numel(final_shape) / d;
            Tensor dnorm(final_shape);
            for (std::size_t t = 0; t < tokens; ++t)
              for (std::size_t c = 0; c < d; ++c) dnorm[t * d + c] = dpooled[c] / static_cast<double>(tokens);
            LayerNormGrads ng = nb(dnorm);
            g.dparams.norm = {std::move(ng.dgamma), std::move(ng.dbeta)};
            Tensor dx = std::move(ng.dx);
            for (std::size_t s = kStages; s-- > 0;) {
              if (s + 1 < kStages) {
                TransitionGrads tg = trans_back[s](dx);
                g.dparams.transitions[s] = std::move(tg.dconv);
                dx = std::move(tg.dx);
              }
              for (std::size_t b = block_back[s].size(); b-- > 0;) {
                BlockGrads bg = block_back[s][b](dx);
                g.dparams.stages[s][b] = std::move(bg.dparams);
                dx = std::move(bg.dx);
              }
            }
            EmbedGrads e = eb(dx);
            g.dparams.embed = std::move(e.dconv);
            g.dparams.embed_norm = std::move(e.dnorm);
            g.dimage = std::move(e.dimage);
            return g;
          }};
}

// --- static analysis -------------------------------------------------------

ParamCount count_params(const ModelConfig& cfg) {
  ParamCount pc;
  auto add = [&](std::string name, std::uint64_t n) {
    pc.items.push_back({std::move(name), n});
    pc.total += n;
  };
  const std::uint64_t c = cfg.base_dim;
  add("embed.conv", kEmbedKernel * kEmbedKernel * 3 * c + c);
  add("embed.norm", 2 * c);
  const std::uint64_t side = 2 * cfg.tau + 1;
  for (std::size_t s = 0; s < kStages; ++s) {
    const std::uint64_t d = cfg.stage_dim(s), n = cfg.blocks_per_stage[s], hidden = d * cfg.mlp_ratio;
    const std::string pre = "stage" + std::to_string(s + 1) + ".";
    add(pre + "attn.qkv", n * 3 * d * d);
    add(pre + "attn.proj", n * d * d);
    add(pre + "lepe", n * side * side * d);
    add(pre + "mlp", n * (d * hidden + hidden + hidden * d + d));
    add(pre + "norm", n * 4 * d);
    if (s + 1 < kStages) {
      add("transition" + std::to_string(s + 1),
          kTransitionKernel * kTransitionKernel * d * 2 * d + 2 * d);
    }
  }
  const std::uint64_t last = cfg.stage_dim(kStages - 1);
  add("norm", 2 * last);
  add("head", last * cfg.num_classes + cfg.num_classes);
  return pc;
}

std::vector<LayerTrace> trace_shapes(const ModelConfig& cfg, std::size_t resolution) {
  cfg.validate(resolution);
  std::vector<LayerTrace> out;
  const std::size_t r0 = ModelConfig::stage_resolution(0, resolution);
  out.push_back({"embed", {resolution, resolution, 3}, {r0, r0, cfg.base_dim}, 0, 0});
  for (std::size_t s = 0; s < kStages; ++s) {
    const AttentionConfig a = stage_attention_config(cfg, s, resolution);
    const Shape shape{a.height, a.width, a.channels};
    for (std::size_t b = 0; b < cfg.blocks_per_stage[s]; ++b) {
      out.push_back({"stage" + std::to_string(s + 1) + ".block" + std::to_string(b), shape, shape, a.stripe_width,
                     a.heads});
    }
    if (s + 1 < kStages) {
      out.push_back({"transition" + std::to_string(s + 1), shape,
                     {a.height / 2, a.width / 2, 2 * a.channels}, 0, 0});
    }
  }
  const std::size_t last = cfg.stage_dim(kStages - 1);
  out.push_back({"head", {last}, {cfg.num_classes}, 0, 0});
  return out;
}

}  // namespace cswin
