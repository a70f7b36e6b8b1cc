// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cswin/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cswin/attention.hpp"
#include "cswin/backbone.hpp"
#include "cswin/gradcheck.hpp"
#include "cswin/ops.hpp"

namespace cswin {

namespace {

Tensor rand_tensor(const Shape& shape, Seed seed, std::string_view name, double std = 1.0) {
  return init_params(shape, derive_seed(seed, name), std);
}

double weighted(const Tensor& y, const Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.numel(); ++i) s += y[i] * w[i];
  return s;
}

// Collects the worst relative error of several gradient comparisons.
class OpCheck {
 public:
  OpCheck(std::string name, double tolerance, bool corrupt)
      : name_(std::move(name)), tolerance_(tolerance), corrupt_(corrupt) {}

  void compare(const std::string& what, Tensor analytic, const ScalarFn& f, const Tensor& at) {
    if (corrupt_) {
      for (double& v : analytic.data()) v *= 1.0 + 1e-3;
    }
    compare_tensors(what, std::move(analytic), finite_diff_grad(f, at, kGradStep), false);
  }

  void compare_tensors(const std::string& what, Tensor analytic, const Tensor& numeric, bool corrupt = true) {
    if (corrupt && corrupt_) {
      for (double& v : analytic.data()) v *= 1.0 + 1e-3;
    }
    const double err = gradient_error(analytic, numeric);
    if (err >= worst_) {
      worst_ = err;
      worst_input_ = what;
    }
  }

  CheckResult result() const {
    return {name_, worst_, tolerance_, worst_ < tolerance_, "worst input: " + worst_input_};
  }

 private:
  std::string name_;
  double tolerance_;
  bool corrupt_;
  double worst_ = 0.0;
  std::string worst_input_ = "-";
};

CheckResult check_matmul(Seed s, bool corrupt) {
  const Tensor a = rand_tensor({3, 4}, s, "a"), b = rand_tensor({4, 5}, s, "b"), w = rand_tensor({3, 5}, s, "w");
  const MatmulGrads g = matmul_with_grad(a, b).grad_fn(w);
  OpCheck c("matmul", kOpGradTolerance, corrupt);
  c.compare("a", g.da, [&](const Tensor& x) { return weighted(matmul(x, b), w); }, a);
  c.compare("b", g.db, [&](const Tensor& x) { return weighted(matmul(a, x), w); }, b);
  return c.result();
}

CheckResult check_softmax(Seed s, bool corrupt) {
  const Tensor x = rand_tensor({3, 4, 2}, s, "x", 2.0), w = rand_tensor({3, 4, 2}, s, "w");
  OpCheck c("softmax", kOpGradTolerance, corrupt);
  for (std::size_t axis = 0; axis < 3; ++axis) {
    const Tensor g = softmax_with_grad(x, axis).grad_fn(w);
    c.compare("axis" + std::to_string(axis), g, [&](const Tensor& v) { return weighted(softmax(v, axis), w); }, x);
  }
  return c.result();
}

CheckResult check_layer_norm(Seed s, bool corrupt) {
  const Tensor x = rand_tensor({4, 6}, s, "x"), w = rand_tensor({4, 6}, s, "w");
  const Tensor gamma = rand_tensor({6}, s, "gamma"), beta = rand_tensor({6}, s, "beta");
  const LayerNormGrads g = layer_norm_with_grad(x, gamma, beta).grad_fn(w);
  OpCheck c("layer_norm", kOpGradTolerance, corrupt);
  c.compare("x", g.dx, [&](const Tensor& v) { return weighted(layer_norm(v, gamma, beta), w); }, x);
  c.compare("gamma", g.dgamma, [&](const Tensor& v) { return weighted(layer_norm(x, v, beta), w); }, gamma);
  c.compare("beta", g.dbeta, [&](const Tensor& v) { return weighted(layer_norm(x, gamma, v), w); }, beta);
  return c.result();
}

CheckResult check_gelu(Seed s, bool corrupt) {
  const Tensor x = rand_tensor({16}, s, "x", 1.5), w = rand_tensor({16}, s, "w");
  OpCheck c("gelu", kOpGradTolerance, corrupt);
  c.compare("x", gelu_with_grad(x).grad_fn(w), [&](const Tensor& v) { return weighted(gelu(v), w); }, x);
  return c.result();
}

CheckResult check_conv2d(Seed s, bool corrupt) {
  const Tensor x = rand_tensor({5, 5, 2}, s, "x"), k = rand_tensor({3, 3, 2, 3}, s, "k");
  const Tensor b = rand_tensor({3}, s, "b");
  const Conv2dGeometry geo{2, 1};
  const Tensor w = rand_tensor({3, 3, 3}, s, "w");
  const Conv2dGrads g = conv2d_with_grad(x, k, b, geo).grad_fn(w);
  OpCheck c("conv2d", kOpGradTolerance, corrupt);
  c.compare("x", g.dx, [&](const Tensor& v) { return weighted(conv2d(v, k, b, geo), w); }, x);
  c.compare("kernel", g.dkernel, [&](const Tensor& v) { return weighted(conv2d(x, v, b, geo), w); }, k);
  c.compare("bias", g.dbias, [&](const Tensor& v) { return weighted(conv2d(x, k, v, geo), w); }, b);
  return c.result();
}

CheckResult check_stripe_head(Seed s, bool corrupt) {
  // One horizontal stripe of a 2x3 map, C = 4, d_k = 2, head owning channels 2..3.
  const Tensor stripe = rand_tensor({6, 4}, s, "stripe");
  const Tensor wq = rand_tensor({4, 2}, s, "wq", 0.5), wk = rand_tensor({4, 2}, s, "wk", 0.5);
  const Tensor wv = rand_tensor({4, 2}, s, "wv", 0.5), w = rand_tensor({6, 2}, s, "w");
  const LePETable lepe(1, rand_tensor({3, 3, 4}, s, "lepe", 0.3));
  const auto coords = stripe_coordinates(2, 3, 2, Orientation::Horizontal, 0);
  const StripeHeadGrads g = stripe_attention_head_with_grad(stripe, {wq, wk, wv, 2}, &lepe, coords).grad_fn(w);
  auto run = [&](const Tensor& st, const Tensor& q, const Tensor& k, const Tensor& v, const LePETable& t) {
    return weighted(stripe_attention_head(st, {q, k, v, 2}, &t, coords), w);
  };
  OpCheck c("stripe_attention_head", kOpGradTolerance, corrupt);
  c.compare("stripe", g.dstripe, [&](const Tensor& x) { return run(x, wq, wk, wv, lepe); }, stripe);
  c.compare("wq", g.dwq, [&](const Tensor& x) { return run(stripe, x, wk, wv, lepe); }, wq);
  c.compare("wk", g.dwk, [&](const Tensor& x) { return run(stripe, wq, x, wv, lepe); }, wk);
  c.compare("wv", g.dwv, [&](const Tensor& x) { return run(stripe, wq, wk, x, lepe); }, wv);
  c.compare("lepe", *g.dtable, [&](const Tensor& x) { return run(stripe, wq, wk, wv, LePETable(1, x)); },
            lepe.table());
  return c.result();
}

CheckResult check_multihead(Seed s, bool corrupt, bool sequential) {
  const AttentionConfig cfg{4, 4, 4, 2, 2, 1};
  const Tensor x = rand_tensor({4, 4, 4}, s, "x"), w = rand_tensor({4, 4, 4}, s, "w");
  const HeadProjections p = HeadProjections::random(4, 2, derive_seed(s, "proj"), 0.5);
  const LePETable lepe(1, rand_tensor({3, 3, 4}, s, "lepe", 0.3));
  auto fwd = [&](const Tensor& in, const HeadProjections& pp, const LePETable& t) {
    return sequential ? sequential_cswin_attention(in, cfg, pp, &t) : cswin_attention(in, cfg, pp, &t);
  };
  const AttentionGrads g = (sequential ? sequential_cswin_attention_with_grad(x, cfg, p, &lepe)
                                       : cswin_attention_with_grad(x, cfg, p, &lepe))
                               .grad_fn(w);
  OpCheck c(sequential ? "sequential_cswin_attention" : "cswin_attention", kOpGradTolerance, corrupt);
  c.compare("x", g.dx, [&](const Tensor& v) { return weighted(fwd(v, p, lepe), w); }, x);
  for (std::size_t h = 0; h < 2; ++h) {
    const std::string hs = std::to_string(h);
    c.compare("wq." + hs, g.dparams.wq[h], [&](const Tensor& v) {
      HeadProjections q = p;
      q.wq[h] = v;
      return weighted(fwd(x, q, lepe), w);
    }, p.wq[h]);
    c.compare("wk." + hs, g.dparams.wk[h], [&](const Tensor& v) {
      HeadProjections q = p;
      q.wk[h] = v;
      return weighted(fwd(x, q, lepe), w);
    }, p.wk[h]);
    c.compare("wv." + hs, g.dparams.wv[h], [&](const Tensor& v) {
      HeadProjections q = p;
      q.wv[h] = v;
      return weighted(fwd(x, q, lepe), w);
    }, p.wv[h]);
  }
  c.compare("wo", g.dparams.wo, [&](const Tensor& v) {
    HeadProjections q = p;
    q.wo = v;
    return weighted(fwd(x, q, lepe), w);
  }, p.wo);
  c.compare("lepe", *g.dtable, [&](const Tensor& v) { return weighted(fwd(x, p, LePETable(1, v)), w); },
            lepe.table());
  return c.result();
}

CheckResult check_token_embed(Seed s, bool corrupt) {
  const Tensor image = rand_tensor({8, 8, 3}, s, "image");
  const ConvParams conv{rand_tensor({7, 7, 3, 4}, s, "k", 0.3), rand_tensor({4}, s, "b")};
  const LayerNormParams norm{rand_tensor({4}, s, "gamma"), rand_tensor({4}, s, "beta")};
  const Tensor w = rand_tensor({2, 2, 4}, s, "w");
  const EmbedGrads g = token_embed_with_grad(image, conv, norm).grad_fn(w);
  OpCheck c("token_embed", kOpGradTolerance, corrupt);
  c.compare("image", g.dimage, [&](const Tensor& v) { return weighted(token_embed(v, conv, norm), w); }, image);
  c.compare("kernel", g.dconv.kernel,
            [&](const Tensor& v) { return weighted(token_embed(image, {v, conv.bias}, norm), w); }, conv.kernel);
  c.compare("bias", g.dconv.bias,
            [&](const Tensor& v) { return weighted(token_embed(image, {conv.kernel, v}, norm), w); }, conv.bias);
  c.compare("gamma", g.dnorm.gamma,
            [&](const Tensor& v) { return weighted(token_embed(image, conv, {v, norm.beta}), w); }, norm.gamma);
  c.compare("beta", g.dnorm.beta,
            [&](const Tensor& v) { return weighted(token_embed(image, conv, {norm.gamma, v}), w); }, norm.beta);
  return c.result();
}

CheckResult check_transition(Seed s, bool corrupt) {
  const Tensor x = rand_tensor({4, 4, 2}, s, "x");
  const ConvParams conv{rand_tensor({3, 3, 2, 4}, s, "k", 0.5), rand_tensor({4}, s, "b")};
  const Tensor w = rand_tensor({2, 2, 4}, s, "w");
  const TransitionGrads g = stage_transition_with_grad(x, conv).grad_fn(w);
  OpCheck c("stage_transition", kOpGradTolerance, corrupt);
  c.compare("x", g.dx, [&](const Tensor& v) { return weighted(stage_transition(v, conv), w); }, x);
  c.compare("kernel", g.dconv.kernel, [&](const Tensor& v) { return weighted(stage_transition(x, {v, conv.bias}), w); },
            conv.kernel);
  return c.result();
}

BlockParams random_block(std::size_t d, std::size_t heads, std::size_t hidden, std::size_t tau, Seed s) {
  const std::size_t side = 2 * tau + 1;
  BlockParams p{{rand_tensor({d}, s, "g1", 0.5), rand_tensor({d}, s, "b1", 0.5)},
                HeadProjections::random(d, heads, derive_seed(s, "attn"), 0.4),
                LePETable(tau, rand_tensor({side, side, d}, s, "lepe", 0.2)),
                {rand_tensor({d}, s, "g2", 0.5), rand_tensor({d}, s, "b2", 0.5)},
                {rand_tensor({d, hidden}, s, "fc1w", 0.4), rand_tensor({hidden}, s, "fc1b", 0.4)},
                {rand_tensor({hidden, d}, s, "fc2w", 0.4), rand_tensor({d}, s, "fc2b", 0.4)}};
  for (double& v : p.norm1.gamma.data()) v += 1.0;
  for (double& v : p.norm2.gamma.data()) v += 1.0;
  return p;
}

CheckResult check_block(Seed s, bool corrupt) {
  const AttentionConfig cfg{4, 4, 4, 2, 2, 1};
  const BlockParams p = random_block(4, 2, 8, 1, derive_seed(s, "block"));
  const Tensor x = rand_tensor({4, 4, 4}, s, "x"), w = rand_tensor({4, 4, 4}, s, "w");
  const BlockGrads g = cswin_block_with_grad(x, cfg, p).grad_fn(w);
  OpCheck c("cswin_block", kOpGradTolerance, corrupt);
  auto run = [&](const BlockParams& bp) { return weighted(cswin_block(x, cfg, bp), w); };
  c.compare("x", g.dx, [&](const Tensor& v) { return weighted(cswin_block(v, cfg, p), w); }, x);
  c.compare("norm1.gamma", g.dparams.norm1.gamma, [&](const Tensor& v) {
    BlockParams q = p;
    q.norm1.gamma = v;
    return run(q);
  }, p.norm1.gamma);
  c.compare("wo", g.dparams.attn.wo, [&](const Tensor& v) {
    BlockParams q = p;
    q.attn.wo = v;
    return run(q);
  }, p.attn.wo);
  c.compare("lepe", g.dparams.lepe.table(), [&](const Tensor& v) {
    BlockParams q = p;
    q.lepe.table() = v;
    return run(q);
  }, p.lepe.table());
  c.compare("norm2.beta", g.dparams.norm2.beta, [&](const Tensor& v) {
    BlockParams q = p;
    q.norm2.beta = v;
    return run(q);
  }, p.norm2.beta);
  c.compare("fc1.weight", g.dparams.fc1.weight, [&](const Tensor& v) {
    BlockParams q = p;
    q.fc1.weight = v;
    return run(q);
  }, p.fc1.weight);
  c.compare("fc2.bias", g.dparams.fc2.bias, [&](const Tensor& v) {
    BlockParams q = p;
    q.fc2.bias = v;
    return run(q);
  }, p.fc2.bias);
  return c.result();
}

ModelConfig small_config() {
  ModelConfig c = desk_config();
  c.blocks_per_stage = {1, 2, 1, 1};
  c.heads_per_stage = {2, 2, 4, 4};
  c.input_size = 64;
  return c;
}

CheckResult check_model(const GradcheckOptions& o) {
  const ModelConfig cfg = o.scale == GradcheckScale::Desk ? desk_config() : small_config();
  const Seed s = o.seed;
  // Seeded init, then every LN, bias and LePE entry perturbed so all paths carry signal.
  ModelParams params = init_model(cfg, derive_seed(s, "model"));
  params.for_each([&](const std::string& path, Tensor& t) {
    const Tensor noise = rand_tensor(t.shape(), s, "noise." + path, 0.1);
    t += noise;
  });
  const std::size_t n = cfg.input_size;
  const Tensor image = rand_tensor({n, n, 3}, s, "image");
  const Tensor w = rand_tensor({cfg.num_classes}, s, "w");
  const ModelGrads g = forward_with_grad(image, cfg, params).grad_fn(w);

  std::vector<std::pair<std::string, Tensor*>> tensors, grads;
  params.for_each([&](const std::string& path, Tensor& t) { tensors.emplace_back(path, &t); });
  ModelParams dparams = g.dparams;
  dparams.for_each([&](const std::string& path, Tensor& t) { grads.emplace_back(path, &t); });
  const std::size_t total = params.scalar_count();

  OpCheck c(o.scale == GradcheckScale::Desk ? "model[desk]" : "model[small]", kModelGradTolerance, o.corrupt_backward);
  SplitMix64 pick(derive_seed(s, "samples").value);
  Tensor analytic({o.model_samples}), numeric({o.model_samples});
  for (std::size_t k = 0; k < o.model_samples; ++k) {
    std::size_t flat = pick.next() % total, t = 0;
    while (flat >= tensors[t].second->numel()) flat -= tensors[t++].second->numel();
    Tensor& target = *tensors[t].second;
    const double orig = target[flat], xp = orig + kGradStep, xm = orig - kGradStep;
    target[flat] = xp;
    const double fp = weighted(forward(image, cfg, params), w);
    target[flat] = xm;
    const double fm = weighted(forward(image, cfg, params), w);
    target[flat] = orig;
    analytic[k] = (*grads[t].second)[flat];
    numeric[k] = (fp - fm) / (xp - xm);
  }
  c.compare_tensors(std::to_string(o.model_samples) + " sampled parameters", analytic, numeric);
  return c.result();
}

}  // namespace

std::vector<CheckResult> run_gradcheck(const GradcheckOptions& o) {
  const Seed s = o.seed;
  const bool bad = o.corrupt_backward;
  return {check_matmul(s, bad),           check_softmax(s, bad),          check_layer_norm(s, bad),
          check_gelu(s, bad),             check_conv2d(s, bad),           check_stripe_head(s, bad),
          check_multihead(s, bad, false), check_multihead(s, bad, true),  check_token_embed(s, bad),
          check_transition(s, bad),       check_block(s, bad),            check_model(o)};
}

// --- oracle suite ----------------------------------------------------------

namespace {

CheckResult oracle_equivalence(std::size_t max_size, Seed s) {
  double worst = 0.0;
  std::size_t cases = 0;
  std::string worst_case = "-";
  for (std::size_t h = 1; h <= max_size; ++h) {
    for (std::size_t heads : {2, 4}) {
      for (std::size_t c = heads; c <= 16; c += heads) {
        const std::string tag = std::to_string(h) + "x" + std::to_string(h) + "x" + std::to_string(c) + " K=" +
                                std::to_string(heads);
        const Seed cs = derive_seed(s, tag);
        const Tensor x = rand_tensor({h, h, c}, cs, "x");
        const HeadProjections p = HeadProjections::random(c, heads, cs, 0.5);
        const AttentionConfig cfg{h, h, c, heads, h, kDefaultTau};
        const LePETable zero(kDefaultTau, c);
        const Tensor ref = full_attention_oracle(x, heads, p);
        const double d = std::max(max_abs_diff(cswin_attention(x, cfg, p, nullptr), ref),
                                  max_abs_diff(cswin_attention(x, cfg, p, &zero), ref));
        ++cases;
        if (d >= worst) {
          worst = d;
          worst_case = tag;
        }
      }
    }
  }
  return {"oracle_equivalence", worst, 1e-10, worst < 1e-10,
          std::to_string(cases) + " shapes, worst " + worst_case};
}

}  // namespace

CheckResult locality_check(std::size_t size, std::size_t sw, Seed s) {
  const std::size_t c = 4, heads = 2;
  const AttentionConfig cfg{size, size, c, heads, sw, kDefaultTau};
  const Tensor x = rand_tensor({size, size, c}, s, "x");
  const HeadProjections p = HeadProjections::random(c, heads, s, 0.5);
  const std::size_t side = 2 * kDefaultTau + 1;
  const LePETable lepe(kDefaultTau, rand_tensor({side, side, c}, s, "lepe", 0.3));
  const Tensor base = cswin_attention(x, cfg, p, &lepe);
  std::size_t violations = 0, pairs = 0;
  for (std::size_t tr = 0; tr < size; ++tr) {
    for (std::size_t tc = 0; tc < size; ++tc) {
      Tensor xp = x;
      for (std::size_t k = 0; k < c; ++k) xp.at(tr, tc, k) += 1.0;
      const Tensor out = cswin_attention(xp, cfg, p, &lepe);
      for (std::size_t i = 0; i < size; ++i) {
        for (std::size_t j = 0; j < size; ++j) {
          const bool in_cross = tr / sw == i / sw || tc / sw == j / sw;
          if (in_cross) continue;
          ++pairs;
          for (std::size_t k = 0; k < c; ++k) {
            if (out.at(i, j, k) != base.at(i, j, k)) {
              ++violations;
              break;
            }
          }
        }
      }
    }
  }
  return {"locality " + std::to_string(size) + "x" + std::to_string(size) + " sw=" + std::to_string(sw),
          static_cast<double>(violations), 0.0, violations == 0, std::to_string(pairs) + " out-of-cross pairs"};
}

namespace {

CheckResult roundtrip_check(std::size_t combos, Seed s) {
  SplitMix64 rng(s.value);
  std::size_t failures = 0;
  for (std::size_t i = 0; i < combos; ++i) {
    const std::size_t sw = 1 + rng.next() % 4;
    const std::size_t h = sw * (1 + rng.next() % 4), w = sw * (1 + rng.next() % 4), c = 1 + rng.next() % 5;
    const Orientation o = rng.next() % 2 ? Orientation::Vertical : Orientation::Horizontal;
    const Tensor x = rand_tensor({h, w, c}, derive_seed(s, std::to_string(i)), "x");
    if (!(stripe_merge(stripe_partition(x, sw, o), sw, o, h, w) == x)) ++failures;
  }
  return {"stripe_roundtrip", static_cast<double>(failures), 0.0, failures == 0,
          std::to_string(combos) + " random geometries"};
}

CheckResult sequential_differs(Seed s) {
  const AttentionConfig cfg{4, 4, 4, 2, 1, kDefaultTau};
  const Tensor x = rand_tensor({4, 4, 4}, s, "x");
  const HeadProjections p = HeadProjections::random(4, 2, s, 0.5);
  const double d = max_abs_diff(cswin_attention(x, cfg, p, nullptr), sequential_cswin_attention(x, cfg, p, nullptr));
  return {"sequential_vs_parallel", d, 0.0, d > 0.0, "max abs diff must be positive"};
}

}  // namespace

std::vector<CheckResult> run_oracle_check(const OracleCheckOptions& o) {
  if (o.max_size == 0 || o.max_size > 16) throw ConfigError("oracle-check: --max-size must be in [1, 16]");
  std::vector<CheckResult> out{oracle_equivalence(o.max_size, o.seed)};
  for (std::size_t sw : {1, 2, 3}) out.push_back(locality_check(6, sw, derive_seed(o.seed, "locality")));
  out.push_back(roundtrip_check(200, derive_seed(o.seed, "roundtrip")));
  out.push_back(sequential_differs(derive_seed(o.seed, "sequential")));
  return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

std::string format_results(const std::vector<CheckResult>& results) {
  std::ostringstream os;
  char line[512];
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-4s %-30s %12.3e (limit %.1e)  %s\n", r.passed ? "PASS" : "FAIL",
                  r.name.c_str(), r.metric, r.threshold, r.detail.c_str());
    os << line;
  }
  return os.str();
}

}  // namespace cswin
