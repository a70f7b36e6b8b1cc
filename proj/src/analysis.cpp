// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cswin/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cswin {

std::uint64_t attention_macs(std::uint64_t height, std::uint64_t width, std::uint64_t channels, std::uint64_t sw) {
  return height * width * channels * (4 * channels + sw * height + sw * width);
}

namespace {

// Accumulates named MAC and auxiliary-op tallies in first-seen order.
class Ledger {
 public:
  void add(const std::string& name, std::uint64_t n) { add_to(items_, index_, name, n); }
  void aux(const std::string& name, std::uint64_t n) { add_to(aux_items_, aux_index_, name, n); }

  std::vector<CountItem> items() const { return items_; }
  std::vector<CountItem> aux_items() const { return aux_items_; }

 private:
  static void add_to(std::vector<CountItem>& v, std::map<std::string, std::size_t>& idx, const std::string& name,
                     std::uint64_t n) {
    auto [it, inserted] = idx.try_emplace(name, v.size());
    if (inserted) v.push_back({name, 0});
    v[it->second].count += n;
  }

  std::vector<CountItem> items_, aux_items_;
  std::map<std::string, std::size_t> index_, aux_index_;
};

std::uint64_t conv_macs(std::uint64_t oh, std::uint64_t ow, std::uint64_t cout, std::uint64_t k, std::uint64_t cin) {
  return oh * ow * cout * k * k * cin;
}

std::uint64_t matmul_macs(std::uint64_t m, std::uint64_t k, std::uint64_t n) { return m * k * n; }

// Mirrors multihead_stripe_attention: per head and stripe, three projections,
// the score matrix and the weighted sum, then the output projection.
AttentionLayerCost count_attention(const AttentionConfig& a, Ledger& aux) {
  AttentionLayerCost cost{0, 0, a.height, a.width, a.channels, a.stripe_width, 0, 0, 0};
  const std::uint64_t dk = a.head_dim();
  const auto orientations = parallel_head_orientations(a.heads);
  for (const Orientation o : orientations) {
    const std::uint64_t stripes = (o == Orientation::Horizontal ? a.height : a.width) / a.stripe_width;
    const std::uint64_t n = a.stripe_width * (o == Orientation::Horizontal ? a.width : a.height);
    for (std::uint64_t m = 0; m < stripes; ++m) {
      cost.projection_macs += 3 * matmul_macs(n, a.channels, dk);
      cost.score_macs += matmul_macs(n, dk, n);
      cost.weighted_sum_macs += n * n * dk;
      aux.aux("attention.softmax", n * n);
      aux.aux("attention.lepe_add", n * n * dk);
    }
  }
  cost.projection_macs += matmul_macs(a.height * a.width, a.channels, a.channels);
  return cost;
}

}  // namespace

CostReport instrument_forward(const ModelConfig& cfg, std::size_t image_size, std::string model_name) {
  cfg.validate(image_size);
  CostReport r;
  r.model = std::move(model_name);
  r.resolution = image_size;
  const ParamCount pc = count_params(cfg);
  r.params = pc.total;
  r.param_items = pc.items;

  Ledger ledger;
  const std::uint64_t c = cfg.base_dim;
  const std::uint64_t r0 = ModelConfig::stage_resolution(0, image_size);
  ledger.add("embed.conv", conv_macs(r0, r0, c, kEmbedKernel, 3));
  ledger.aux("embed.norm", r0 * r0 * c);
  for (std::size_t s = 0; s < kStages; ++s) {
    const AttentionConfig a = stage_attention_config(cfg, s, image_size);
    const std::uint64_t tokens = a.height * a.width, d = a.channels, hidden = d * cfg.mlp_ratio;
    const std::string pre = "stage" + std::to_string(s + 1) + ".";
    StageCost sc{a.height, a.channels, a.heads, a.stripe_width, cfg.blocks_per_stage[s], 0, 0,
                 attention_region(Mechanism::CSWin, a.height, a.stripe_width)};
    for (std::size_t b = 0; b < cfg.blocks_per_stage[s]; ++b) {
      AttentionLayerCost layer = count_attention(a, ledger);
      layer.stage = s;
      layer.block = b;
      ledger.add(pre + "attn.projections", layer.projection_macs);
      ledger.add(pre + "attn.scores", layer.score_macs);
      ledger.add(pre + "attn.weighted_sum", layer.weighted_sum_macs);
      sc.attention_macs += layer.macs();
      r.attention_layers.push_back(layer);

      const std::uint64_t mlp = matmul_macs(tokens, d, hidden) + matmul_macs(tokens, hidden, d);
      ledger.add(pre + "mlp", mlp);
      sc.mlp_macs += mlp;
      ledger.aux(pre + "norm", 2 * tokens * d);
      ledger.aux(pre + "gelu", tokens * hidden);
      ledger.aux(pre + "bias", tokens * (hidden + d));
      ledger.aux(pre + "residual", 2 * tokens * d);
    }
    r.stages.push_back(sc);
    if (s + 1 < kStages) {
      ledger.add("transition" + std::to_string(s + 1),
                 conv_macs(a.height / 2, a.width / 2, 2 * d, kTransitionKernel, d));
    }
  }
  const std::uint64_t last = cfg.stage_dim(kStages - 1);
  const std::uint64_t r3 = ModelConfig::stage_resolution(kStages - 1, image_size);
  ledger.aux("norm", r3 * r3 * last);
  ledger.aux("pool", r3 * r3 * last);
  ledger.add("head", matmul_macs(1, last, cfg.num_classes));

  r.mac_items = ledger.items();
  for (const auto& it : r.mac_items) r.total_macs += it.count;
  r.flops_paper_convention = r.total_macs;
  r.aux_items = ledger.aux_items();
  for (const auto& it : r.aux_items) r.aux_ops += it.count;
  return r;
}

Mechanism parse_mechanism(std::string_view name) {
  if (name == "cswin") return Mechanism::CSWin;
  if (name == "axial") return Mechanism::Axial;
  if (name == "criss-cross" || name == "criss_cross") return Mechanism::CrissCross;
  throw ConfigError("unknown mechanism '" + std::string(name) + "'; valid: cswin, axial, criss-cross");
}

std::uint64_t attention_region(Mechanism mechanism, std::uint64_t height, std::uint64_t sw) {
  switch (mechanism) {
    case Mechanism::CSWin:
      return sw * height;
    case Mechanism::Axial:
      return height;
    case Mechanism::CrissCross:
      return 2 * height - 1;
  }
  return 0;
}

std::optional<std::pair<double, double>> published_cost(std::string_view variant) {
  if (variant == "T") return std::pair{23e6, 4.3e9};
  if (variant == "S") return std::pair{35e6, 6.9e9};
  if (variant == "B") return std::pair{78e6, 15.0e9};
  if (variant == "L") return std::pair{173e6, 31.5e9};
  return std::nullopt;
}

ReferenceRow reference_row(std::string_view name, const ModelConfig& cfg, std::size_t resolution) {
  const CostReport r = instrument_forward(cfg, resolution, std::string(name));
  ReferenceRow row{std::string(name), r.params, r.total_macs, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  if (resolution == 224) {
    if (auto pub = published_cost(name)) {
      row.published_params = pub->first;
      row.published_macs = pub->second;
      row.params_deviation = (static_cast<double>(row.params) - pub->first) / pub->first;
      row.macs_deviation = (static_cast<double>(row.macs) - pub->second) / pub->second;
    }
  }
  return row;
}

std::vector<ReferenceRow> reference_report() {
  std::vector<ReferenceRow> rows;
  for (const char* v : {"T", "S", "B", "L"}) rows.push_back(reference_row(v, builtin_variant(v)));
  const ModelConfig desk = desk_config();
  rows.push_back(reference_row("desk", desk, desk.input_size));
  return rows;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string millions(double v) { return fmt("%.2fM", v / 1e6); }
std::string giga(double v) { return fmt("%.3fG", v / 1e9); }
std::string percent(const std::optional<double>& v) { return v ? fmt("%+.2f%%", *v * 100.0) : "n/a"; }

std::string row_status(const ReferenceRow& r) {
  if (!r.params_deviation) return "-";
  const bool ok = std::abs(*r.params_deviation) <= kParamTolerance && std::abs(*r.macs_deviation) <= kMacTolerance;
  return ok ? "ok" : "OUT";
}

nlohmann::ordered_json row_json(const ReferenceRow& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["params"] = r.params;
  j["macs"] = r.macs;
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
  j["published_params"] = opt(r.published_params);
  j["published_macs"] = opt(r.published_macs);
  j["params_deviation"] = opt(r.params_deviation);
  j["macs_deviation"] = opt(r.macs_deviation);
  return j;
}

nlohmann::ordered_json items_json(const std::vector<CountItem>& items) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& it : items) j[it.name] = it.count;
  return j;
}

}  // namespace

std::string format_reference_text(const std::vector<ReferenceRow>& rows) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-6s %12s %12s %9s %12s %12s %9s %6s\n", "model", "params", "published", "dev",
                "MACs", "published", "dev", "status");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-6s %12s %12s %9s %12s %12s %9s %6s\n", r.name.c_str(),
                  millions(static_cast<double>(r.params)).c_str(),
                  r.published_params ? millions(*r.published_params).c_str() : "n/a", percent(r.params_deviation).c_str(),
                  giga(static_cast<double>(r.macs)).c_str(), r.published_macs ? giga(*r.published_macs).c_str() : "n/a",
                  percent(r.macs_deviation).c_str(), row_status(r).c_str());
    os << line;
  }
  return os.str();
}

std::string reference_json(const std::vector<ReferenceRow>& rows) {
  nlohmann::ordered_json j;
  j["param_tolerance"] = kParamTolerance;
  j["mac_tolerance"] = kMacTolerance;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) j["rows"].push_back(row_json(r));
  return j.dump(2) + "\n";
}

std::string format_cost_report_text(const CostReport& r, const std::optional<ReferenceRow>& row) {
  std::ostringstream os;
  char line[256];
  os << "model " << r.model << " at " << r.resolution << "x" << r.resolution << "\n";
  os << "params " << r.params << " (" << millions(static_cast<double>(r.params)) << ")\n";
  for (const auto& it : r.param_items) {
    std::snprintf(line, sizeof line, "  %-24s %14llu\n", it.name.c_str(), static_cast<unsigned long long>(it.count));
    os << line;
  }
  os << "stages\n";
  std::snprintf(line, sizeof line, "  %-6s %6s %6s %6s %4s %7s %16s %16s %8s\n", "stage", "grid", "dim", "heads", "sw",
                "blocks", "attention MACs", "MLP MACs", "region");
  os << line;
  for (std::size_t s = 0; s < r.stages.size(); ++s) {
    const StageCost& sc = r.stages[s];
    std::snprintf(line, sizeof line, "  %-6zu %6zu %6zu %6zu %4zu %7zu %16llu %16llu %8llu\n", s + 1, sc.resolution,
                  sc.dim, sc.heads, sc.stripe_width, sc.blocks, static_cast<unsigned long long>(sc.attention_macs),
                  static_cast<unsigned long long>(sc.mlp_macs), static_cast<unsigned long long>(sc.attention_region));
    os << line;
  }
  os << "attention layers (instrumented vs closed form)\n";
  for (const auto& l : r.attention_layers) {
    const std::uint64_t closed = attention_macs(l.height, l.width, l.channels, l.stripe_width);
    std::snprintf(line, sizeof line, "  stage%zu.block%-3zu H=%-3zu W=%-3zu C=%-5zu sw=%-2zu %14llu %14llu %s\n",
                  l.stage + 1, l.block, l.height, l.width, l.channels, l.stripe_width,
                  static_cast<unsigned long long>(l.macs()), static_cast<unsigned long long>(closed),
                  l.macs() == closed ? "exact" : "MISMATCH");
    os << line;
  }
  os << "MACs\n";
  for (const auto& it : r.mac_items) {
    std::snprintf(line, sizeof line, "  %-28s %16llu\n", it.name.c_str(), static_cast<unsigned long long>(it.count));
    os << line;
  }
  os << "total MACs " << r.total_macs << " (" << giga(static_cast<double>(r.total_macs))
     << ", reported as FLOPs)\n";
  os << "auxiliary ops (not in MAC total) " << r.aux_ops << "\n";
  if (row) os << format_reference_text({*row});
  return os.str();
}

std::string cost_report_json(const CostReport& r, const std::optional<ReferenceRow>& row) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["resolution"] = r.resolution;
  j["params"] = r.params;
  j["param_items"] = items_json(r.param_items);
  j["stages"] = nlohmann::ordered_json::array();
  for (const auto& sc : r.stages) {
    nlohmann::ordered_json s;
    s["resolution"] = sc.resolution;
    s["dim"] = sc.dim;
    s["heads"] = sc.heads;
    s["stripe_width"] = sc.stripe_width;
    s["blocks"] = sc.blocks;
    s["attention_macs"] = sc.attention_macs;
    s["mlp_macs"] = sc.mlp_macs;
    s["attention_region"] = sc.attention_region;
    j["stages"].push_back(s);
  }
  j["attention_layers"] = nlohmann::ordered_json::array();
  for (const auto& l : r.attention_layers) {
    nlohmann::ordered_json a;
    a["stage"] = l.stage;
    a["block"] = l.block;
    a["height"] = l.height;
    a["width"] = l.width;
    a["channels"] = l.channels;
    a["stripe_width"] = l.stripe_width;
    a["projection_macs"] = l.projection_macs;
    a["score_macs"] = l.score_macs;
    a["weighted_sum_macs"] = l.weighted_sum_macs;
    a["macs"] = l.macs();
    a["closed_form_macs"] = attention_macs(l.height, l.width, l.channels, l.stripe_width);
    j["attention_layers"].push_back(a);
  }
  j["mac_items"] = items_json(r.mac_items);
  j["total_macs"] = r.total_macs;
  j["flops_paper_convention"] = r.flops_paper_convention;
  j["aux_items"] = items_json(r.aux_items);
  j["aux_ops"] = r.aux_ops;
  if (row) j["reference"] = row_json(*row);
  return j.dump(2) + "\n";
}

}  // namespace cswin
