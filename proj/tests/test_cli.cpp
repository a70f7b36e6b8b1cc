// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "cswin/checkpoint.hpp"
#include "cswin/init.hpp"
#include "cswin/io.hpp"
#include "doctest.h"

using namespace cswin;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "cswin_test_cli";
  static bool fresh = false;
  if (!fresh) {
    fs::remove_all(p);
    fs::create_directories(p);
    fresh = true;
  }
  return p;
}

}  // namespace

TEST_CASE("trace") {
  const Run t = run({"trace", "--variant", "T", "--resolution", "224"});
  CHECK(t.code == cli::kOk);
  for (const char* grid : {"56x56", "28x28", "14x14", "7x7"}) CHECK(t.out.find(grid) != std::string::npos);
  const Run d = run({"trace", "--variant", "desk"});
  CHECK(d.code == cli::kOk);
  for (const char* grid : {" 8x8 ", " 4x4 ", " 2x2 ", " 1x1 "}) CHECK(d.out.find(grid) != std::string::npos);
  const Run bad = run({"trace", "--variant", "T", "--resolution", "223"});
  CHECK(bad.code == cli::kGeometry);
  CHECK(bad.err.find("divisible") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"trace", "--variant", "T", "--bogus"}).code == cli::kUsage);
  CHECK(run({"trace"}).code == cli::kUsage);
  CHECK(run({"trace", "--variant", "T", "--config", "x.json"}).code == cli::kUsage);
  CHECK(run({"trace", "--variant", "T", "region"}).code == cli::kUsage);
  CHECK(run({"oracle-check", "--max-size", "17"}).code == cli::kUsage);
  CHECK(run({"gradcheck", "--scale", "huge"}).code == cli::kUsage);
  CHECK(run({"--help"}).code == cli::kOk);
  const Run v = run({"trace", "--variant", "X"});
  CHECK(v.code == cli::kGeometry);
  CHECK(v.err.find("T, S, B, L") != std::string::npos);
}

TEST_CASE("flops") {
  const Run b = run({"flops", "--variant", "B", "--resolution", "224"});
  CHECK(b.code == cli::kOk);
  const Run j = run({"flops", "--variant", "B", "--resolution", "224", "--json"});
  REQUIRE(j.code == cli::kOk);
  const auto doc = nlohmann::ordered_json::parse(j.out);
  CHECK(doc.dump(2) + "\n" == j.out);
  const double macs = doc["total_macs"].get<double>();
  CHECK(std::abs(macs - 15.0e9) / 15.0e9 <= 0.05);
  for (const auto& layer : doc["attention_layers"]) {
    CHECK(layer["macs"].get<std::uint64_t>() == layer["closed_form_macs"].get<std::uint64_t>());
  }
  CHECK(run({"flops", "--variant", "B", "--json"}).out == j.out);
}

TEST_CASE("region") {
  CHECK(run({"region", "--mechanism", "cswin", "--height", "56", "--sw", "7"}).out == "392\n");
  CHECK(run({"region", "--mechanism", "axial", "--height", "56"}).out == "56\n");
  CHECK(run({"region", "--mechanism", "criss-cross", "--height", "56"}).out == "111\n");
  const Run bad = run({"region", "--mechanism", "swin", "--height", "56"});
  CHECK(bad.code != cli::kOk);
  CHECK(bad.err.find("cswin, axial, criss-cross") != std::string::npos);
}

TEST_CASE("init and forward") {
  const fs::path dir = scratch();
  const std::string ck = (dir / "ck").string();
  REQUIRE(run({"init", "--variant", "desk", "--seed", "7", "--output", ck}).code == cli::kOk);
  const Tensor image = init_params({32, 32, 3}, Seed{99}, 1.0);
  const fs::path input = dir / "image.cswt";
  write_cswt(input, image);

  const std::string a = (dir / "a.cswt").string(), b = (dir / "b.cswt").string();
  REQUIRE(run({"forward", "--params", ck, "--input", input.string(), "--output", a}).code == cli::kOk);
  REQUIRE(run({"forward", "--params", ck, "--input", input.string(), "--output", b, "--threads", "4"}).code ==
          cli::kOk);
  CHECK(slurp(a) == slurp(b));

  const Checkpoint loaded = load_checkpoint(ck);
  CHECK(read_cswt(a) == forward(image, desk_config(), init_model(desk_config(), Seed{7})));
  CHECK(loaded.config == desk_config());

  const fs::path cfg = dir / "desk.json";
  std::ofstream(cfg) << config_to_json(desk_config());
  CHECK(run({"forward", "--config", cfg.string(), "--params", ck, "--input", input.string(), "--output", b}).code ==
        cli::kOk);
}

TEST_CASE("forward error classes") {
  const fs::path dir = scratch();
  const std::string ck = (dir / "ck2").string();
  REQUIRE(run({"init", "--variant", "desk", "--output", ck}).code == cli::kOk);
  auto bytes = encode_cswt(Tensor({32, 32, 3}));
  bytes[1] = 'X';
  const fs::path corrupt = dir / "corrupt.cswt";
  std::ofstream(corrupt, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                 static_cast<std::streamsize>(bytes.size()));
  const std::string out = (dir / "o.cswt").string();
  const Run f = run({"forward", "--params", ck, "--input", corrupt.string(), "--output", out});
  CHECK(f.code == cli::kFormat);
  CHECK(f.err.find("magic") != std::string::npos);

  const Run io = run({"forward", "--params", ck, "--input", (dir / "absent.cswt").string(), "--output", out});
  CHECK(io.code == cli::kIo);

  write_cswt(dir / "odd.cswt", Tensor({30, 30, 3}));
  const Run g = run({"forward", "--params", ck, "--input", (dir / "odd.cswt").string(), "--output", out});
  CHECK(g.code == cli::kGeometry);

  const fs::path other = dir / "t.json";
  std::ofstream(other) << config_to_json(builtin_variant("T"));
  CHECK(run({"forward", "--config", other.string(), "--params", ck, "--input", (dir / "odd.cswt").string(), "--output",
             out})
            .code == cli::kGeometry);

  const fs::path typo = dir / "typo.json";
  std::ofstream(typo) << R"({"base_dim": 16, "blocks_per_stage": [1,1,1,1], "stripe_width": [1,2,2,2],
                            "heads_per_stage": [2,2,2,2]})";
  CHECK(run({"trace", "--config", typo.string()}).code == cli::kFormat);
}

TEST_CASE("verification commands") {
  const Run g = run({"gradcheck"});
  CHECK(g.code == cli::kOk);
  CHECK(g.out.find("FAIL") == std::string::npos);
  const Run bad = run({"gradcheck", "--corrupt-backward"});
  CHECK(bad.code == cli::kVerification);
  const Run o = run({"oracle-check", "--max-size", "8"});
  CHECK(o.code == cli::kOk);
  CHECK(o.out.find("sequential_vs_parallel") != std::string::npos);
}
