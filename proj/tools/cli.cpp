// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cswin/analysis.hpp"
#include "cswin/backbone.hpp"
#include "cswin/checkpoint.hpp"
#include "cswin/io.hpp"
#include "cswin/parallel.hpp"
#include "cswin/verify.hpp"

namespace cswin::cli {

namespace {

struct ModelSource {
  std::string variant;
  std::string config_path;

  void add_to(CLI::App& cmd) {
    auto* v = cmd.add_option("--variant", variant, "Builtin model: T, S, B, L or desk");
    auto* c = cmd.add_option("--config", config_path, "JSON model config");
    v->excludes(c);
    cmd.final_callback([this] {
      if (!given()) throw CLI::RequiredError("--variant or --config");
    });
  }

  bool given() const { return !variant.empty() || !config_path.empty(); }

  std::string name() const { return variant.empty() ? config_path : variant; }

  ModelConfig load() const {
    if (!variant.empty()) return named_config(variant);
    return load_config(config_path);
  }
};

std::string dims(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out;
}

DType parse_dtype(const std::string& s) {
  if (s == "f64") return DType::F64;
  if (s == "f32") return DType::F32;
  throw ConfigError("unknown dtype '" + s + "' (expected f32 or f64)");
}

int cmd_trace(const ModelSource& src, std::optional<std::size_t> resolution, std::ostream& out) {
  const ModelConfig cfg = src.load();
  const std::size_t res = resolution.value_or(cfg.input_size);
  const auto layers = trace_shapes(cfg, res);
  char line[160];
  out << "model " << src.name() << "  input " << res << "x" << res << "x3\n\n";
  std::snprintf(line, sizeof line, "%-18s %-14s %-14s %4s %6s\n", "layer", "input", "output", "sw", "heads");
  out << line;
  for (const auto& l : layers) {
    const std::string sw = l.stripe_width ? std::to_string(l.stripe_width) : "-";
    const std::string heads = l.heads ? std::to_string(l.heads) : "-";
    std::snprintf(line, sizeof line, "%-18s %-14s %-14s %4s %6s\n", l.name.c_str(), dims(l.input).c_str(),
                  dims(l.output).c_str(), sw.c_str(), heads.c_str());
    out << line;
  }
  out << "\n";
  std::snprintf(line, sizeof line, "%-6s %-8s %7s %5s %6s %4s %7s\n", "stage", "grid", "tokens", "dim", "heads", "sw",
                "blocks");
  out << line;
  for (std::size_t s = 0; s < kStages; ++s) {
    const AttentionConfig a = stage_attention_config(cfg, s, res);
    const std::string grid = std::to_string(a.height) + "x" + std::to_string(a.width);
    std::snprintf(line, sizeof line, "%-6zu %-8s %7zu %5zu %6zu %4zu %7zu\n", s + 1, grid.c_str(), a.height * a.width,
                  a.channels, a.heads, a.stripe_width, cfg.blocks_per_stage[s]);
    out << line;
  }
  return kOk;
}

int cmd_flops(const ModelSource& src, std::optional<std::size_t> resolution, bool json, std::ostream& out) {
  const ModelConfig cfg = src.load();
  const std::size_t res = resolution.value_or(cfg.input_size);
  cfg.validate(res);
  const std::string name = src.name();
  const CostReport report = instrument_forward(cfg, res, name);
  const ReferenceRow row = reference_row(src.variant.empty() ? "custom" : src.variant, cfg, res);
  out << (json ? cost_report_json(report, row) : format_cost_report_text(report, row));
  return kOk;
}

struct ForwardArgs {
  std::string config_path;
  std::string params_dir;
  std::string input;
  std::string output;
  std::string dtype = "f64";
  std::size_t threads = 1;
};

int cmd_forward(const ForwardArgs& a, std::ostream& out) {
  Checkpoint ck = load_checkpoint(a.params_dir);
  if (!a.config_path.empty() && !(load_config(a.config_path) == ck.config)) {
    throw ConfigError("--config does not match the config stored in " + a.params_dir);
  }
  const DType dtype = parse_dtype(a.dtype);
  const Tensor image = read_cswt(a.input);
  if (a.threads == 0) throw ConfigError("--threads must be at least 1");
  set_num_threads(a.threads);
  const Tensor logits = forward(image, ck.config, ck.params);
  write_cswt(a.output, logits, dtype);
  out << "wrote " << a.output << " " << shape_to_string(logits.shape()) << "\n";
  return kOk;
}

int report(const std::vector<CheckResult>& results, std::ostream& out) {
  out << format_results(results);
  const bool ok = all_passed(results);
  out << (ok ? "all checks passed\n" : "verification FAILED\n");
  return ok ? kOk : kVerification;
}

int cmd_region(const std::string& mechanism, std::uint64_t height, std::uint64_t sw, std::ostream& out) {
  out << attention_region(parse_mechanism(mechanism), height, sw) << "\n";
  return kOk;
}

int cmd_init(const ModelSource& src, std::uint64_t seed, const std::string& dir, const std::string& dtype,
             double std, std::ostream& out) {
  const ModelConfig cfg = src.load();
  cfg.validate();
  const DType dt = parse_dtype(dtype);
  if (!(std > 0.0)) throw ConfigError("--std must be positive");
  const ModelParams params = init_model(cfg, Seed{seed}, std);
  save_checkpoint(dir, cfg, params, dt);
  out << "wrote " << params.scalar_count() << " parameters to " << dir << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-shaped window attention reference: shapes, costs, forward pass and verification", "cswin"};
  app.require_subcommand(1, 1);

  ModelSource trace_src, flops_src, init_src;
  std::optional<std::size_t> trace_res, flops_res;
  bool flops_json = false;

  auto* trace = app.add_subcommand("trace", "Per-layer shapes and stage token grids");
  trace_src.add_to(*trace);
  trace->add_option("--resolution", trace_res, "Square input side (default: config input_size)");

  auto* flops = app.add_subcommand("flops", "Parameter and multiply-accumulate report");
  flops_src.add_to(*flops);
  flops->add_option("--resolution", flops_res, "Square input side (default: config input_size)");
  flops->add_flag("--json", flops_json, "Emit JSON");

  ForwardArgs fwd;
  auto* forward_cmd = app.add_subcommand("forward", "Run the model on a CSWT image");
  forward_cmd->add_option("--config", fwd.config_path, "JSON config that must match the checkpoint");
  forward_cmd->add_option("--params", fwd.params_dir, "Checkpoint directory")->required();
  forward_cmd->add_option("--input", fwd.input, "Image tensor [H x W x 3]")->required();
  forward_cmd->add_option("--output", fwd.output, "Logits tensor")->required();
  forward_cmd->add_option("--dtype", fwd.dtype, "Output dtype: f64 or f32");
  forward_cmd->add_option("--threads", fwd.threads, "Worker threads (results do not depend on it)");

  GradcheckOptions gopt;
  std::string scale = "desk";
  auto* grad = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradients");
  grad->add_option("--seed", gopt.seed.value, "Seed");
  grad->add_option("--scale", scale, "Model for the end-to-end check")
      ->check(CLI::IsMember({"desk", "small"}));
  grad->add_flag("--corrupt-backward", gopt.corrupt_backward, "Perturb analytic gradients (harness self-test)");

  OracleCheckOptions oopt;
  auto* oracle = app.add_subcommand("oracle-check", "Equivalence, locality and round-trip checks");
  oracle->add_option("--max-size", oopt.max_size, "Largest square map side")->check(CLI::Range(1, 16));
  oracle->add_option("--seed", oopt.seed.value, "Seed");

  std::string mechanism;
  std::uint64_t height = 0, sw = 1;
  auto* region = app.add_subcommand("region", "Tokens attended per head");
  region->add_option("--mechanism", mechanism, "cswin, axial or criss-cross")->required();
  region->add_option("--height", height, "Feature map side")->required();
  region->add_option("--sw", sw, "Stripe width");

  std::uint64_t init_seed = 0;
  std::string init_dir, init_dtype = "f64";
  double init_std = kDefaultInitStd;
  auto* init = app.add_subcommand("init", "Write seeded parameters to a checkpoint directory");
  init_src.add_to(*init);
  init->add_option("--seed", init_seed, "Seed");
  init->add_option("--output", init_dir, "Checkpoint directory")->required();
  init->add_option("--dtype", init_dtype, "Tensor dtype: f64 or f32");
  init->add_option("--std", init_std, "Weight standard deviation");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*trace) return cmd_trace(trace_src, trace_res, out);
    if (*flops) return cmd_flops(flops_src, flops_res, flops_json, out);
    if (*forward_cmd) return cmd_forward(fwd, out);
    if (*grad) {
      gopt.scale = scale == "small" ? GradcheckScale::Small : GradcheckScale::Desk;
      return report(run_gradcheck(gopt), out);
    }
    if (*oracle) return report(run_oracle_check(oopt), out);
    if (*region) return cmd_region(mechanism, height, sw, out);
    if (*init) return cmd_init(init_src, init_seed, init_dir, init_dtype, init_std, out);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const GeometryError& e) {
    err << "geometry error: " << e.what() << "\n";
    return kGeometry;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kGeometry;
  } catch (const DimensionError& e) {
    err << "shape error: " << e.what() << "\n";
    return kGeometry;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace cswin::cli
