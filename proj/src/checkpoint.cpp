// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cswin/checkpoint.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cswin {

namespace {

using Json = nlohmann::ordered_json;

Json config_json(const ModelConfig& c) {
  Json j;
  j["base_dim"] = c.base_dim;
  j["blocks_per_stage"] = c.blocks_per_stage;
  j["stripe_widths"] = c.stripe_widths;
  j["heads_per_stage"] = c.heads_per_stage;
  j["mlp_ratio"] = c.mlp_ratio;
  j["num_classes"] = c.num_classes;
  j["input_size"] = c.input_size;
  j["tau"] = c.tau;
  return j;
}

std::size_t get_count(const Json& v, const std::string& key) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw FormatError("config: '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::array<std::size_t, kStages> get_stages(const Json& v, const std::string& key) {
  if (!v.is_array() || v.size() != kStages) throw FormatError("config: '" + key + "' must be an array of 4 integers");
  std::array<std::size_t, kStages> out{};
  for (std::size_t i = 0; i < kStages; ++i) out[i] = get_count(v[i], key);
  return out;
}

ModelConfig config_from(const Json& j) {
  if (!j.is_object()) throw FormatError("config: expected a JSON object");
  ModelConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "base_dim") {
      c.base_dim = get_count(v, key);
    } else if (key == "blocks_per_stage") {
      c.blocks_per_stage = get_stages(v, key);
    } else if (key == "stripe_widths") {
      c.stripe_widths = get_stages(v, key);
    } else if (key == "heads_per_stage") {
      c.heads_per_stage = get_stages(v, key);
    } else if (key == "mlp_ratio") {
      c.mlp_ratio = get_count(v, key);
    } else if (key == "num_classes") {
      c.num_classes = get_count(v, key);
    } else if (key == "input_size") {
      c.input_size = get_count(v, key);
    } else if (key == "tau") {
      c.tau = get_count(v, key);
    } else {
      throw FormatError("config: unknown key '" + key + "'");
    }
  }
  for (const char* required : {"base_dim", "blocks_per_stage", "stripe_widths", "heads_per_stage"}) {
    if (!j.contains(required)) throw FormatError(std::string("config: missing required key '") + required + "'");
  }
  return c;
}

Json parse(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(what + ": " + e.what());
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string config_to_json(const ModelConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

ModelConfig config_from_json(std::string_view text) { return config_from(parse(text, "config")); }

ModelConfig load_config(const std::filesystem::path& path) {
  try {
    return config_from_json(slurp(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& dir, const ModelConfig& cfg, const ModelParams& params,
                     DType dtype) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  Json manifest;
  manifest["format"] = "cswin-checkpoint";
  manifest["version"] = 1;
  manifest["dtype"] = dtype == DType::F32 ? "f32" : "f64";
  manifest["config"] = config_json(cfg);
  Json tensors = Json::object();
  params.for_each([&](const std::string& path, const Tensor& t) {
    const std::string file = path + ".cswt";
    write_cswt(dir / file, t, dtype);
    tensors[path] = file;
  });
  manifest["tensors"] = std::move(tensors);
  std::ofstream out(dir / kManifestName, std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / kManifestName).string());
  out << manifest.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto manifest_path = dir / kManifestName;
  const Json m = parse(slurp(manifest_path), manifest_path.string());
  if (!m.is_object() || m.value("format", "") != "cswin-checkpoint") {
    throw FormatError(manifest_path.string() + ": not a cswin checkpoint manifest");
  }
  if (m.value("version", 0) != 1) throw FormatError(manifest_path.string() + ": unsupported manifest version");
  if (!m.contains("config") || !m.contains("tensors") || !m["tensors"].is_object()) {
    throw FormatError(manifest_path.string() + ": manifest needs 'config' and 'tensors'");
  }
  Checkpoint ck{config_from(m["config"]), {}};
  ck.config.validate();
  ck.params = ModelParams::zeros(ck.config);
  const Json& tensors = m["tensors"];
  std::set<std::string> seen;
  ck.params.for_each([&](const std::string& path, Tensor& t) {
    if (!tensors.contains(path) || !tensors[path].is_string()) {
      throw FormatError(manifest_path.string() + ": missing tensor '" + path + "'");
    }
    Tensor loaded = read_cswt(dir / tensors[path].get<std::string>());
    if (loaded.shape() != t.shape()) {
      throw FormatError("tensor '" + path + "' has shape " + shape_to_string(loaded.shape()) + ", expected " +
                        shape_to_string(t.shape()));
    }
    t = std::move(loaded);
    seen.insert(path);
  });
  for (const auto& [key, _] : tensors.items()) {
    if (!seen.contains(key)) throw FormatError(manifest_path.string() + ": unexpected tensor '" + key + "'");
  }
  return ck;
}

}  // namespace cswin
