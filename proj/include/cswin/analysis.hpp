// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cswin/backbone.hpp"

namespace cswin {

/// Closed-form attention cost of one layer, H*W*C*(4C + sw*H + sw*W): the
/// q/k/v/output projections plus scores and weighted sums of both head groups.
std::uint64_t attention_macs(std::uint64_t height, std::uint64_t width, std::uint64_t channels, std::uint64_t sw);

struct AttentionLayerCost {
  std::size_t stage = 0;
  std::size_t block = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::size_t stripe_width = 0;
  std::uint64_t projection_macs = 0;
  std::uint64_t score_macs = 0;
  std::uint64_t weighted_sum_macs = 0;

  std::uint64_t macs() const noexcept { return projection_macs + score_macs + weighted_sum_macs; }
};

struct StageCost {
  std::size_t resolution = 0;
  std::size_t dim = 0;
  std::size_t heads = 0;
  std::size_t stripe_width = 0;
  std::size_t blocks = 0;
  std::uint64_t attention_macs = 0;
  std::uint64_t mlp_macs = 0;
  std::uint64_t attention_region = 0;
};

/// Parameter and multiply-accumulate accounting for one model at one input
/// size. "FLOPs" follow the usual vision convention of counting MACs, so
/// flops_paper_convention == total_macs. Norms, softmax, GELU, bias and
/// residual adds are tallied separately in aux_ops.
struct CostReport {
  std::string model;
  std::size_t resolution = 0;
  std::uint64_t params = 0;
  std::vector<CountItem> param_items;
  std::vector<StageCost> stages;
  std::vector<AttentionLayerCost> attention_layers;
  std::vector<CountItem> mac_items;
  std::uint64_t total_macs = 0;
  std::uint64_t flops_paper_convention = 0;
  std::vector<CountItem> aux_items;
  std::uint64_t aux_ops = 0;
};

/// Walks the network at `image_size` tallying every multiply-accumulate the
/// numeric forward pass performs, without touching any values.
CostReport instrument_forward(const ModelConfig& cfg, std::size_t image_size, std::string model_name = "custom");

enum class Mechanism { CSWin, Axial, CrissCross };

/// "cswin", "axial", "criss-cross" (also "criss_cross"); ConfigError otherwise.
Mechanism parse_mechanism(std::string_view name);

/// Tokens each head attends to on a square H x H map.
std::uint64_t attention_region(Mechanism mechanism, std::uint64_t height, std::uint64_t sw = 1);

struct ReferenceRow {
  std::string name;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
  std::optional<double> published_params;
  std::optional<double> published_macs;
  std::optional<double> params_deviation;  // (computed - published) / published
  std::optional<double> macs_deviation;
};

inline constexpr double kParamTolerance = 0.03;
inline constexpr double kMacTolerance = 0.05;

/// Published parameter count and MACs at 224x224 for a builtin variant name.
std::optional<std::pair<double, double>> published_cost(std::string_view variant);

ReferenceRow reference_row(std::string_view name, const ModelConfig& cfg, std::size_t resolution = 224);

/// Rows for T, S, B, L (with published values) and desk (without).
std::vector<ReferenceRow> reference_report();

std::string format_reference_text(const std::vector<ReferenceRow>& rows);
std::string reference_json(const std::vector<ReferenceRow>& rows);

std::string format_cost_report_text(const CostReport& report, const std::optional<ReferenceRow>& row = std::nullopt);
/// Stable-key JSON (2-space indent). Parsing and re-emitting yields the same bytes.
std::string cost_report_json(const CostReport& report, const std::optional<ReferenceRow>& row = std::nullopt);

}  // namespace cswin
