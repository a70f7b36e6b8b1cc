// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cswin/init.hpp"
#include "cswin/lepe.hpp"
#include "cswin/ops.hpp"
#include "cswin/tensor.hpp"

namespace cswin {

enum class Orientation { Horizontal, Vertical };

const char* to_string(Orientation o) noexcept;

/// Geometry of one cross-shaped window attention layer.
struct AttentionConfig {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::size_t heads = 0;
  std::size_t stripe_width = 1;
  std::size_t tau = kDefaultTau;

  std::size_t head_dim() const noexcept { return channels / heads; }

  /// ConfigError for odd or non-dividing head counts, GeometryError when the
  /// stripe width does not divide the height or the width.
  void validate() const;
};

/// Per-head query/key/value projections [C x d_k] plus the shared output
/// projection [C x C]. No bias terms.
struct HeadProjections {
  std::vector<Tensor> wq;
  std::vector<Tensor> wk;
  std::vector<Tensor> wv;
  Tensor wo;

  std::size_t heads() const noexcept { return wq.size(); }
  std::size_t channels() const { return wo.dim(0); }

  static HeadProjections zeros(std::size_t channels, std::size_t heads);
  /// Every matrix drawn with init_params from a seed derived from its name.
  static HeadProjections random(std::size_t channels, std::size_t heads, Seed seed, double std = kDefaultInitStd);

  /// Throws DimensionError unless shapes agree with (channels, heads).
  void check(std::size_t channels, std::size_t heads) const;

  HeadProjections& operator+=(const HeadProjections& other);
};

/// [H x W x C] -> [W x H x C].
Tensor transpose_hw(const Tensor& x);

/// Splits x [H x W x C] into stripes of `sw` rows (Horizontal, tokens
/// row-major inside each stripe) or `sw` columns (Vertical, tokens
/// column-major). Each stripe is [n x C].
std::vector<Tensor> stripe_partition(const Tensor& x, std::size_t sw, Orientation orientation);

/// Inverse of stripe_partition.
Tensor stripe_merge(std::span<const Tensor> stripes, std::size_t sw, Orientation orientation, std::size_t height,
                    std::size_t width);

/// Feature-map coordinates of the tokens of stripe `index`, in stripe order.
std::vector<Coord> stripe_coordinates(std::size_t height, std::size_t width, std::size_t sw,
                                      Orientation orientation, std::size_t index);

/// One head's projection matrices and the first LePE channel it owns.
struct HeadSlice {
  const Tensor& wq;
  const Tensor& wk;
  const Tensor& wv;
  std::size_t channel_offset = 0;
};

/// softmax over keys of q k^T / sqrt(d): rows sum to one.
Tensor attention_weights(const Tensor& q, const Tensor& k);

/// Single-head attention inside one stripe.
///
///   z[i][c] = sum_j (alpha[i][j] + beta_c[i][j]) v[j][c]
///
/// alpha is shared by all channels of the head; beta_c comes from `lepe` at
/// channel `channel_offset + c`. A null `lepe` means no positional term.
Tensor stripe_attention_head(const Tensor& stripe, const HeadSlice& proj, const LePETable* lepe,
                             std::span<const Coord> coords);

struct StripeHeadGrads {
  Tensor dstripe;
  Tensor dwq;
  Tensor dwk;
  Tensor dwv;
  /// Same shape as the LePE table; empty when no table was used.
  std::optional<Tensor> dtable;
};

GradPair<StripeHeadGrads> stripe_attention_head_with_grad(const Tensor& stripe, const HeadSlice& proj,
                                                          const LePETable* lepe, std::span<const Coord> coords);

struct AttentionGrads {
  Tensor dx;
  HeadProjections dparams;
  std::optional<Tensor> dtable;
};

/// Heads run stripe attention in the listed orientations; the concatenation
/// (head order) is projected by W^O.
Tensor multihead_stripe_attention(const Tensor& x, const AttentionConfig& cfg, const HeadProjections& params,
                                  const LePETable* lepe, std::span<const Orientation> head_orientations);
GradPair<AttentionGrads> multihead_stripe_attention_with_grad(const Tensor& x, const AttentionConfig& cfg,
                                                              const HeadProjections& params, const LePETable* lepe,
                                                              std::span<const Orientation> head_orientations);

/// Parallel grouping: heads [0, K/2) horizontal, heads [K/2, K) vertical.
std::vector<Orientation> parallel_head_orientations(std::size_t heads);

/// Cross-shaped window self-attention on x [H x W x C].
Tensor cswin_attention(const Tensor& x, const AttentionConfig& cfg, const HeadProjections& params,
                       const LePETable* lepe);
GradPair<AttentionGrads> cswin_attention_with_grad(const Tensor& x, const AttentionConfig& cfg,
                                                   const HeadProjections& params, const LePETable* lepe);

/// Ablation: all heads attend horizontally, then all heads attend vertically
/// on that result. Both passes share `params` and `lepe`, each applying W^O.
Tensor sequential_cswin_attention(const Tensor& x, const AttentionConfig& cfg, const HeadProjections& params,
                                  const LePETable* lepe);
GradPair<AttentionGrads> sequential_cswin_attention_with_grad(const Tensor& x, const AttentionConfig& cfg,
                                                              const HeadProjections& params, const LePETable* lepe);

/// Plain multi-head self-attention over all H*W tokens, no positional term.
Tensor full_attention_oracle(const Tensor& x, std::size_t heads, const HeadProjections& params);

}  // namespace cswin
