// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cswin/attention.hpp"
#include "cswin/lepe.hpp"
#include "cswin/tensor.hpp"

namespace cswin {

inline constexpr std::size_t kStages = 4;

/// One row of the variant table plus the run-time knobs.
struct ModelConfig {
  std::size_t base_dim = 64;
  std::array<std::size_t, kStages> blocks_per_stage{};
  std::array<std::size_t, kStages> stripe_widths{};
  std::array<std::size_t, kStages> heads_per_stage{};
  std::size_t mlp_ratio = 4;
  std::size_t num_classes = 1000;
  std::size_t input_size = 224;
  std::size_t tau = kDefaultTau;

  std::size_t stage_dim(std::size_t stage) const noexcept { return base_dim << stage; }
  /// Token grid side of `stage` for a square image of side `resolution`.
  static std::size_t stage_resolution(std::size_t stage, std::size_t resolution) noexcept {
    return (resolution / 4) >> stage;
  }
  /// Configured stripe width, clamped to the stage grid when wider than it.
  std::size_t effective_stripe_width(std::size_t stage, std::size_t resolution) const noexcept;

  /// Throws ConfigError / GeometryError naming the offending stage when the
  /// configuration cannot run at `resolution`.
  void validate(std::size_t resolution) const;
  void validate() const { validate(input_size); }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// "T", "S", "B" or "L". Anything else throws ConfigError listing them.
ModelConfig builtin_variant(std::string_view name);

/// Small model used for desk-scale verification: dim 16, one block per stage,
/// stripe widths 1,2,2,2, two heads everywhere, 10 classes, 32x32 input.
ModelConfig desk_config();

/// builtin_variant names plus "desk".
ModelConfig named_config(std::string_view name);

struct LayerNormParams {
  Tensor gamma;
  Tensor beta;
};

struct ConvParams {
  Tensor kernel;
  Tensor bias;
};

struct LinearParams {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]
};

struct BlockParams {
  LayerNormParams norm1;
  HeadProjections attn;
  LePETable lepe{kDefaultTau, 1};
  LayerNormParams norm2;
  LinearParams fc1;
  LinearParams fc2;
};

struct ModelParams {
  ConvParams embed;
  LayerNormParams embed_norm;
  std::array<std::vector<BlockParams>, kStages> stages;
  std::array<ConvParams, kStages - 1> transitions;
  LayerNormParams norm;
  LinearParams head;

  /// All-zero parameters with the shapes `cfg` implies.
  static ModelParams zeros(const ModelConfig& cfg);

  /// Visits every tensor as (path, tensor) in a fixed order.
  template <typename F>
  void for_each(F&& f);
  template <typename F>
  void for_each(F&& f) const;

  std::size_t scalar_count() const;
  ModelParams& operator+=(const ModelParams& other);
};

/// Seeded initialization: weights and kernels ~ init_params(std 0.02) with a
/// per-tensor seed from the tensor path, biases and LN beta zero, LN gamma
/// one, LePE tables zero.
ModelParams init_model(const ModelConfig& cfg, Seed seed, double std = kDefaultInitStd);

// --- building blocks -------------------------------------------------------

inline constexpr Conv2dGeometry kEmbedConv{4, 3};
inline constexpr std::size_t kEmbedKernel = 7;
inline constexpr Conv2dGeometry kTransitionConv{2, 1};
inline constexpr std::size_t kTransitionKernel = 3;

/// 7x7 stride-4 conv followed by layer norm: [Hp x Wp x 3] -> [Hp/4 x Wp/4 x C].
Tensor token_embed(const Tensor& image, const ConvParams& conv, const LayerNormParams& norm);

struct EmbedGrads {
  Tensor dimage;
  ConvParams dconv;
  LayerNormParams dnorm;
};
GradPair<EmbedGrads> token_embed_with_grad(const Tensor& image, const ConvParams& conv, const LayerNormParams& norm);

/// x + Attn(LN(x)), then + MLP(LN(.)) with MLP = fc1, GELU, fc2.
Tensor cswin_block(const Tensor& x, const AttentionConfig& cfg, const BlockParams& params);

struct BlockGrads {
  Tensor dx;
  BlockParams dparams;
};
GradPair<BlockGrads> cswin_block_with_grad(const Tensor& x, const AttentionConfig& cfg, const BlockParams& params);

/// 3x3 stride-2 conv, padding 1: [H x W x D] -> [H/2 x W/2 x 2D]. H, W even.
Tensor stage_transition(const Tensor& x, const ConvParams& conv);

struct TransitionGrads {
  Tensor dx;
  ConvParams dconv;
};
GradPair<TransitionGrads> stage_transition_with_grad(const Tensor& x, const ConvParams& conv);

/// Attention geometry of every block of `stage` for a square input.
AttentionConfig stage_attention_config(const ModelConfig& cfg, std::size_t stage, std::size_t resolution);

/// Image [Hp x Wp x 3] (square) -> logits [num_classes].
Tensor forward(const Tensor& image, const ModelConfig& cfg, const ModelParams& params);

struct ModelGrads {
  Tensor dimage;
  ModelParams dparams;
};
GradPair<ModelGrads> forward_with_grad(const Tensor& image, const ModelConfig& cfg, const ModelParams& params);

// --- static analysis -------------------------------------------------------

struct CountItem {
  std::string name;
  std::uint64_t count = 0;
};

struct ParamCount {
  std::uint64_t total = 0;
  std::vector<CountItem> items;
};

/// Exact learnable-scalar count derived from the configuration alone.
ParamCount count_params(const ModelConfig& cfg);

struct LayerTrace {
  std::string name;
  Shape input;
  Shape output;
  std::size_t stripe_width = 0;
  std::size_t heads = 0;
};

/// Per-layer shapes for a square input of side `resolution`.
std::vector<LayerTrace> trace_shapes(const ModelConfig& cfg, std::size_t resolution);

// ---------------------------------------------------------------------------

template <typename F>
void ModelParams::for_each(F&& f) {
  std::as_const(*this).for_each([&](const std::string& path, const Tensor& t) { f(path, const_cast<Tensor&>(t)); });
}

template <typename F>
void ModelParams::for_each(F&& f) const {
  f("embed.conv.kernel", embed.kernel);
  f("embed.conv.bias", embed.bias);
  f("embed.norm.gamma", embed_norm.gamma);
  f("embed.norm.beta", embed_norm.beta);
  for (std::size_t s = 0; s < kStages; ++s) {
    for (std::size_t b = 0; b < stages[s].size(); ++b) {
      const BlockParams& p = stages[s][b];
      const std::string pre = "stages." + std::to_string(s) + ".blocks." + std::to_string(b) + ".";
      f(pre + "norm1.gamma", p.norm1.gamma);
      f(pre + "norm1.beta", p.norm1.beta);
      for (std::size_t h = 0; h < p.attn.heads(); ++h) {
        const std::string hs = std::to_string(h);
        f(pre + "attn.wq." + hs, p.attn.wq[h]);
        f(pre + "attn.wk." + hs, p.attn.wk[h]);
        f(pre + "attn.wv." + hs, p.attn.wv[h]);
      }
      f(pre + "attn.wo", p.attn.wo);
      f(pre + "lepe.table", p.lepe.table());
      f(pre + "norm2.gamma", p.norm2.gamma);
      f(pre + "norm2.beta", p.norm2.beta);
      f(pre + "mlp.fc1.weight", p.fc1.weight);
      f(pre + "mlp.fc1.bias", p.fc1.bias);
      f(pre + "mlp.fc2.weight", p.fc2.weight);
      f(pre + "mlp.fc2.bias", p.fc2.bias);
    }
    if (s + 1 < kStages) {
      f("transitions." + std::to_string(s) + ".kernel", transitions[s].kernel);
      f("transitions." + std::to_string(s) + ".bias", transitions[s].bias);
    }
  }
  f("norm.gamma", norm.gamma);
  f("norm.beta", norm.beta);
  f("head.weight", head.weight);
  f("head.bias", head.bias);
}

}  // namespace cswin
