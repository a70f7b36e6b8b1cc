// Copyright 2026 The cswin-ref Authors.
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cswin/analysis.hpp"
#include "cswin/attention.hpp"
#include "cswin/backbone.hpp"
#include "cswin/checkpoint.hpp"
#include "cswin/io.hpp"
#include "cswin/parallel.hpp"
#include "cswin/verify.hpp"

namespace py = pybind11;
using namespace cswin;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  if (shape.empty()) throw DimensionError("expected an array with at least one dimension");
  return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

std::vector<Tensor> to_tensors(const std::vector<Array>& xs) {
  std::vector<Tensor> out;
  for (const auto& x : xs) out.push_back(to_tensor(x));
  return out;
}

Orientation parse_orientation(std::string_view s) {
  if (s == "horizontal") return Orientation::Horizontal;
  if (s == "vertical") return Orientation::Vertical;
  throw ConfigError("orientation must be 'horizontal' or 'vertical'");
}

HeadProjections projections(const std::vector<Array>& wq, const std::vector<Array>& wk, const std::vector<Array>& wv,
                            const Array& wo) {
  return {to_tensors(wq), to_tensors(wk), to_tensors(wv), to_tensor(wo)};
}

std::optional<LePETable> table(const std::optional<Array>& lepe, std::size_t tau) {
  if (!lepe) return std::nullopt;
  return LePETable(tau, to_tensor(*lepe));
}

AttentionConfig attention_config(const Tensor& x, std::size_t heads, std::size_t sw, std::size_t tau) {
  if (x.rank() != 3) throw DimensionError("expected x of shape (H, W, C), got " + shape_to_string(x.shape()));
  return {x.dim(0), x.dim(1), x.dim(2), heads, sw, tau};
}

py::list results_to_list(const std::vector<CheckResult>& results) {
  py::list out;
  for (const auto& r : results) {
    py::dict d;
    d["name"] = r.name;
    d["metric"] = r.metric;
    d["threshold"] = r.threshold;
    d["passed"] = r.passed;
    d["detail"] = r.detail;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_cswin, m) {
  m.doc() = "Cross-shaped window attention reference implementation";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  static py::exception<DimensionError> dim_error(m, "DimensionError", base.ptr());
  static py::exception<GeometryError> geo_error(m, "GeometryError", base.ptr());
  static py::exception<FormatError> fmt_error(m, "FormatError", base.ptr());
  static py::exception<ConfigError> cfg_error(m, "ConfigError", base.ptr());
  static py::exception<IoError> io_error(m, "IoError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DimensionError& e) {
      py::set_error(dim_error, e.what());
    } catch (const GeometryError& e) {
      py::set_error(geo_error, e.what());
    } catch (const FormatError& e) {
      py::set_error(fmt_error, e.what());
    } catch (const ConfigError& e) {
      py::set_error(cfg_error, e.what());
    } catch (const IoError& e) {
      py::set_error(io_error, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("base_dim", &ModelConfig::base_dim)
      .def_readwrite("blocks_per_stage", &ModelConfig::blocks_per_stage)
      .def_readwrite("stripe_widths", &ModelConfig::stripe_widths)
      .def_readwrite("heads_per_stage", &ModelConfig::heads_per_stage)
      .def_readwrite("mlp_ratio", &ModelConfig::mlp_ratio)
      .def_readwrite("num_classes", &ModelConfig::num_classes)
      .def_readwrite("input_size", &ModelConfig::input_size)
      .def_readwrite("tau", &ModelConfig::tau)
      .def("validate", [](const ModelConfig& c, std::optional<std::size_t> res) { c.validate(res.value_or(c.input_size)); },
           py::arg("resolution") = py::none())
      .def("to_json", &config_to_json)
      .def_static("from_json", &config_from_json)
      .def("__eq__", [](const ModelConfig& a, const ModelConfig& b) { return a == b; })
      .def("__repr__", [](const ModelConfig& c) { return "ModelConfig(" + config_to_json(c) + ")"; });

  m.def("variant", &named_config, py::arg("name"), "Builtin configuration: T, S, B, L or desk.");
  m.def("count_params", [](const ModelConfig& c) {
    const ParamCount pc = count_params(c);
    std::vector<std::pair<std::string, std::uint64_t>> items;
    for (const auto& it : pc.items) items.emplace_back(it.name, it.count);
    return std::make_pair(pc.total, items);
  });
  m.def("cost_report_json",
        [](const ModelConfig& c, std::optional<std::size_t> res, const std::string& name) {
          const std::size_t r = res.value_or(c.input_size);
          return cost_report_json(instrument_forward(c, r, name), reference_row(name, c, r));
        },
        py::arg("config"), py::arg("resolution") = py::none(), py::arg("name") = "custom");
  m.def("reference_json", [] { return reference_json(reference_report()); });

  m.def("attention_macs", &attention_macs, py::arg("height"), py::arg("width"), py::arg("channels"), py::arg("sw"));
  m.def("attention_region",
        [](const std::string& mech, std::uint64_t h, std::uint64_t sw) {
          return attention_region(parse_mechanism(mech), h, sw);
        },
        py::arg("mechanism"), py::arg("height"), py::arg("sw") = 1);

  m.def("stripe_partition",
        [](const Array& x, std::size_t sw, const std::string& o) {
          std::vector<Array> out;
          for (const auto& s : stripe_partition(to_tensor(x), sw, parse_orientation(o))) out.push_back(to_array(s));
          return out;
        },
        py::arg("x"), py::arg("sw"), py::arg("orientation"));
  m.def("stripe_merge",
        [](const std::vector<Array>& stripes, std::size_t sw, const std::string& o, std::size_t h, std::size_t w) {
          return to_array(stripe_merge(to_tensors(stripes), sw, parse_orientation(o), h, w));
        },
        py::arg("stripes"), py::arg("sw"), py::arg("orientation"), py::arg("height"), py::arg("width"));

  m.def("random_projections",
        [](std::size_t channels, std::size_t heads, std::uint64_t seed, double std) {
          const HeadProjections p = HeadProjections::random(channels, heads, Seed{seed}, std);
          std::vector<Array> q, k, v;
          for (std::size_t h = 0; h < heads; ++h) {
            q.push_back(to_array(p.wq[h]));
            k.push_back(to_array(p.wk[h]));
            v.push_back(to_array(p.wv[h]));
          }
          return py::make_tuple(q, k, v, to_array(p.wo));
        },
        py::arg("channels"), py::arg("heads"), py::arg("seed"), py::arg("std") = kDefaultInitStd,
        "Seeded (wq, wk, wv, wo); wq/wk/wv are per-head lists.");

  auto attention = [](bool sequential) {
    return [sequential](const Array& x, std::size_t sw, const std::vector<Array>& wq, const std::vector<Array>& wk,
                        const std::vector<Array>& wv, const Array& wo, const std::optional<Array>& lepe,
                        std::size_t tau) {
      const Tensor xt = to_tensor(x);
      const HeadProjections p = projections(wq, wk, wv, wo);
      const auto t = table(lepe, tau);
      const AttentionConfig cfg = attention_config(xt, p.heads(), sw, tau);
      const LePETable* tp = t ? &*t : nullptr;
      return to_array(sequential ? sequential_cswin_attention(xt, cfg, p, tp) : cswin_attention(xt, cfg, p, tp));
    };
  };
  m.def("cswin_attention", attention(false), py::arg("x"), py::arg("sw"), py::arg("wq"), py::arg("wk"), py::arg("wv"),
        py::arg("wo"), py::arg("lepe") = py::none(), py::arg("tau") = kDefaultTau);
  m.def("sequential_cswin_attention", attention(true), py::arg("x"), py::arg("sw"), py::arg("wq"), py::arg("wk"),
        py::arg("wv"), py::arg("wo"), py::arg("lepe") = py::none(), py::arg("tau") = kDefaultTau);
  m.def("full_attention_oracle",
        [](const Array& x, const std::vector<Array>& wq, const std::vector<Array>& wk, const std::vector<Array>& wv,
           const Array& wo) {
          const HeadProjections p = projections(wq, wk, wv, wo);
          return to_array(full_attention_oracle(to_tensor(x), p.heads(), p));
        },
        py::arg("x"), py::arg("wq"), py::arg("wk"), py::arg("wv"), py::arg("wo"));

  m.def("init_checkpoint",
        [](const ModelConfig& c, std::uint64_t seed, const std::filesystem::path& dir, double std) {
          c.validate();
          save_checkpoint(dir, c, init_model(c, Seed{seed}, std));
        },
        py::arg("config"), py::arg("seed"), py::arg("directory"), py::arg("std") = kDefaultInitStd);
  m.def("forward_checkpoint",
        [](const std::filesystem::path& dir, const Array& image) {
          const Checkpoint ck = load_checkpoint(dir);
          return to_array(forward(to_tensor(image), ck.config, ck.params));
        },
        py::arg("directory"), py::arg("image"));
  m.def("forward_seeded",
        [](const ModelConfig& c, std::uint64_t seed, const Array& image) {
          return to_array(forward(to_tensor(image), c, init_model(c, Seed{seed})));
        },
        py::arg("config"), py::arg("seed"), py::arg("image"));

  m.def("read_cswt", [](const std::filesystem::path& p) { return to_array(read_cswt(p)); });
  m.def("write_cswt",
        [](const std::filesystem::path& p, const Array& a, const std::string& dtype) {
          if (dtype != "f64" && dtype != "f32") throw ConfigError("dtype must be 'f32' or 'f64'");
          write_cswt(p, to_tensor(a), dtype == "f32" ? DType::F32 : DType::F64);
        },
        py::arg("path"), py::arg("array"), py::arg("dtype") = "f64");

  m.def("gradcheck",
        [](std::uint64_t seed, const std::string& scale) {
          GradcheckOptions o;
          o.seed = Seed{seed};
          if (scale != "desk" && scale != "small") throw ConfigError("scale must be 'desk' or 'small'");
          o.scale = scale == "small" ? GradcheckScale::Small : GradcheckScale::Desk;
          return results_to_list(run_gradcheck(o));
        },
        py::arg("seed") = 0, py::arg("scale") = "desk");
  m.def("oracle_check",
        [](std::size_t max_size, std::uint64_t seed) {
          return results_to_list(run_oracle_check({max_size, Seed{seed}}));
        },
        py::arg("max_size") = 8, py::arg("seed") = 0);

  m.def("set_num_threads", &set_num_threads);
  m.def("num_threads", &num_threads);
}
