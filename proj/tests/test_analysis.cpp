// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <nlohmann/json.hpp>

#include "cswin/analysis.hpp"
#include "cswin/init.hpp"
#include "cswin/ops.hpp"
#include "doctest.h"

using namespace cswin;

TEST_CASE("attention cost closed form") {
  CHECK(attention_macs(56, 56, 64, 1) == 73859072ULL);
  CHECK(attention_macs(56, 56, 64, 1) == 56ULL * 56 * 64 * (256 + 56 + 56));
  for (std::uint64_t h : {2, 4, 7}) {
    CHECK(attention_macs(h, h, 32, h) == h * h * 32 * (4 * 32 + 2 * h * h));
  }
}

TEST_CASE("attention cost is monotone in stripe width") {
  for (std::uint64_t h : {8, 12, 56}) {
    std::uint64_t prev = 0;
    for (std::uint64_t sw = 1; sw <= h; ++sw) {
      if (h % sw != 0) continue;
      const std::uint64_t m = attention_macs(h, h, 64, sw);
      CHECK(m >= prev);
      prev = m;
    }
  }
}

TEST_CASE("desk totals against a hand derivation") {
  // embed 8*8*147*16; per stage R^2 D (4D + 2 sw R) + 8 R^2 D^2; transitions
  // (R/2)^2 * 9 * D * 2D; head 128 * 10.
  const std::uint64_t expect = 150528 + (81920 + 131072) + 73728 + (73728 + 131072) + 73728 + (67584 + 131072) +
                               73728 + (65792 + 131072) + 1280;
  const CostReport r = instrument_forward(desk_config(), 32, "desk");
  CHECK(r.total_macs == expect);
  CHECK(r.flops_paper_convention == r.total_macs);
  CHECK(r.params == 375978);
  const AttentionLayerCost& s2 = r.attention_layers[1];
  CHECK(s2.height == 4);
  CHECK(s2.stripe_width == 2);
  CHECK(s2.macs() == attention_macs(4, 4, 32, 2));
}

TEST_CASE("instrumented count equals the work of the numeric forward") {
  for (const char* which : {"desk", "small"}) {
    ModelConfig cfg = desk_config();
    if (std::string(which) == "small") {
      cfg.blocks_per_stage = {1, 2, 1, 1};
      cfg.heads_per_stage = {2, 2, 4, 4};
      cfg.input_size = 64;
    }
    const ModelParams p = init_model(cfg, Seed{1});
    const Tensor image = init_params({cfg.input_size, cfg.input_size, 3}, Seed{2}, 1.0);
    MacTally tally;
    forward(image, cfg, p);
    CHECK(tally.total() == instrument_forward(cfg, cfg.input_size).total_macs);
  }
}

TEST_CASE("every attention layer of every builtin variant matches the closed form") {
  for (const char* v : {"T", "S", "B", "L"}) {
    const CostReport r = instrument_forward(builtin_variant(v), 224, v);
    for (const auto& a : r.attention_layers) {
      CHECK(a.macs() == attention_macs(a.height, a.width, a.channels, a.stripe_width));
      CHECK(a.projection_macs == 4ULL * a.height * a.width * a.channels * a.channels);
    }
  }
}

TEST_CASE("attention region") {
  CHECK(attention_region(Mechanism::CSWin, 56, 7) == 392);
  CHECK(attention_region(Mechanism::Axial, 56) == 56);
  CHECK(attention_region(Mechanism::CrissCross, 56) == 111);
  CHECK(attention_region(Mechanism::CSWin, 56, 2) == 112);
  CHECK(attention_region(Mechanism::CSWin, 56, 2) == attention_region(Mechanism::CrissCross, 56) + 1);
  for (std::uint64_t h = 1; h < 100; ++h) {
    CHECK(attention_region(Mechanism::CSWin, h, 1) == attention_region(Mechanism::Axial, h));
  }
  CHECK(parse_mechanism("criss_cross") == Mechanism::CrissCross);
  try {
    parse_mechanism("swin");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("criss-cross") != std::string::npos);
  }
}

TEST_CASE("table rows") {
  const auto rows = reference_report();
  REQUIRE(rows.size() == 5);
  CHECK(rows[4].name == "desk");
  CHECK_FALSE(rows[4].published_params.has_value());
  for (std::size_t i = 0; i < 4; ++i) {
    INFO(rows[i].name);
    CHECK(std::abs(*rows[i].params_deviation) <= kParamTolerance);
  }
  CHECK(std::abs(*rows[0].macs_deviation) <= kMacTolerance);
  CHECK(std::abs(*rows[1].macs_deviation) <= kMacTolerance);
  CHECK(std::abs(*rows[2].macs_deviation) <= kMacTolerance);
  const std::string text = format_reference_text(rows);
  CHECK(text.find("n/a") != std::string::npos);
  CHECK(format_reference_text(reference_report()) == text);
}

TEST_CASE("JSON reports re-emit byte-identically") {
  const CostReport r = instrument_forward(builtin_variant("T"), 224, "T");
  const ReferenceRow row = reference_row("T", builtin_variant("T"));
  for (const std::string& doc : {cost_report_json(r, row), reference_json(reference_report())}) {
    const auto parsed = nlohmann::ordered_json::parse(doc);
    CHECK(parsed.dump(2) + "\n" == doc);
  }
  const auto j = nlohmann::json::parse(cost_report_json(r, row));
  for (const char* key : {"model", "resolution", "params", "total_macs", "flops_paper_convention", "stages",
                          "attention_layers", "aux_ops"}) {
    CHECK(j.contains(key));
  }
}
