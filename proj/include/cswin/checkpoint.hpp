// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cswin/backbone.hpp"
#include "cswin/io.hpp"

namespace cswin {

/// ModelConfig <-> JSON using the field names base_dim, blocks_per_stage,
/// stripe_widths, heads_per_stage, mlp_ratio, num_classes, input_size, tau.
/// Parsing rejects unknown keys and wrongly typed values with FormatError;
/// missing optional keys keep their defaults.
std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(std::string_view text);
ModelConfig load_config(const std::filesystem::path& path);

/// Checkpoint directory layout:
///   manifest.json   {"format": "cswin-checkpoint", "version": 1,
///                    "config": {...}, "tensors": {"<param path>": "<file>"}}
///   <param path>.cswt, one CSWT tensor per parameter
struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

inline constexpr std::string_view kManifestName = "manifest.json";

void save_checkpoint(const std::filesystem::path& dir, const ModelConfig& cfg, const ModelParams& params,
                     DType dtype = DType::F64);
/// FormatError when the manifest is malformed, a tensor is missing from it or
/// has the wrong shape for the stored config.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace cswin
