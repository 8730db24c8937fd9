// Copyright 2026 The mpipu Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "mpipu/alignment.hpp"
#include "mpipu/errors.hpp"
#include "mpipu/exact.hpp"
#include "mpipu/experiment.hpp"
#include "mpipu/fp_codec.hpp"
#include "mpipu/ipu.hpp"
#include "mpipu/precision_study.hpp"
#include "mpipu/tile_sim.hpp"

namespace py = pybind11;
using namespace mpipu;

namespace {

using U16Array = py::array_t<std::uint16_t, py::array::c_style | py::array::forcecast>;

std::vector<Fp16Value> decode_vector(const U16Array& bits) {
  if (bits.ndim() != 1) throw ConfigError("expected a 1-D array of FP16 bit patterns");
  std::vector<Fp16Value> out(static_cast<std::size_t>(bits.size()));
  const std::uint16_t* p = bits.data();
  std::transform(p, p + bits.size(), out.begin(), decode_fp16);
  return out;
}

std::vector<std::uint16_t> to_vector(const U16Array& a, std::size_t want, const char* what) {
  if (static_cast<std::size_t>(a.size()) != want) throw ConfigError(std::string(what) + " has the wrong element count");
  return {a.data(), a.data() + a.size()};
}

IpuConfig make_ipu(int lanes, int precision, int sw_precision) {
  IpuConfig c;
  c.lanes = lanes;
  c.precision = precision;
  c.sw_precision = sw_precision;
  c.validate();
  return c;
}

py::dict cycle_dict(const AlignmentCycle& c) {
  py::dict d;
  std::vector<int> served;
  for (int k = 0; k < static_cast<int>(c.local_shifts.size()); ++k)
    if (lane_set(c.served, k)) served.push_back(k);
  d["partition"] = c.partition;
  d["served"] = served;
  d["local_shifts"] = c.local_shifts;
  d["extra_shift"] = c.extra_shift;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mpipu, m) {
  m.doc() = "Multi-cycle FP16 inner product unit models";
  m.attr("__version__") = kToolVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("decode_fp16", [](std::uint16_t bits) {
    const Fp16Value v = decode_fp16(bits);
    py::dict d;
    d["sign"] = v.sign;
    d["exp"] = v.exp;
    d["magnitude"] = v.magnitude;
    d["class"] = std::string(to_string(v.cls));
    if (v.finite()) {
      const DecomposedOperand n = decompose_fp16(v);
      d["nibbles"] = std::vector<int>{n.nibbles[0], n.nibbles[1], n.nibbles[2]};
    }
    return d;
  }, py::arg("bits"));

  m.def("schedule", [](std::vector<int> diffs, int sp, int sw_precision, bool charge_empty_partitions) {
    const LaneMask mask = mask_beyond_precision(diffs, sw_precision);
    const AlignmentSchedule s = schedule_cycles(diffs, mask, sp, charge_empty_partitions);
    py::list cycles;
    for (const AlignmentCycle& c : s.cycles) cycles.append(cycle_dict(c));
    return cycles;
  }, py::arg("diffs"), py::arg("sp"), py::arg("sw_precision") = kNoMasking,
     py::arg("charge_empty_partitions") = false);

  m.def("fp_ip", [](const U16Array& a, const U16Array& b, int lanes, int precision, int sw_precision,
                    const std::string& acc_format, bool multi_cycle) {
    const auto av = decode_vector(a);
    const auto bv = decode_vector(b);
    if (av.size() != bv.size()) throw ConfigError("operand vectors differ in length");
    const FloatFormat f = parse_float_format(acc_format);
    FpIpResult r;
    {
      py::gil_scoped_release release;
      r = fp_ip_approx(av, bv, make_ipu(lanes, precision, sw_precision), f,
                       multi_cycle ? Datapath::kMultiCycle : Datapath::kTruncating);
    }
    return py::make_tuple(r.bits, bits_to_double(r.bits, f));
  }, py::arg("a"), py::arg("b"), py::arg("lanes") = 16, py::arg("precision") = 16,
     py::arg("sw_precision") = 16, py::arg("acc_format") = "fp16", py::arg("multi_cycle") = false,
     "Approximate inner product of FP16 bit patterns; returns (result bits, value).");

  m.def("exact_ip", [](const U16Array& a, const U16Array& b, const std::string& fmt) {
    const auto av = decode_vector(a);
    const auto bv = decode_vector(b);
    if (av.size() != bv.size()) throw ConfigError("operand vectors differ in length");
    const ExactValue e = exact_fp_ip(av, bv);
    return py::make_tuple(e.round(parse_float_format(fmt)), e.to_double());
  }, py::arg("a"), py::arg("b"), py::arg("acc_format") = "fp16",
     "Exact inner product; returns (correctly rounded bits, value as double).");

  m.def("int_ip", [](std::vector<std::int64_t> a, std::vector<std::int64_t> b, int a_width, int b_width,
                     bool is_signed, int lanes) {
    const IntIpResult r = int_ip(a, b, a_width, b_width, make_ipu(lanes, 16, 16),
                                 is_signed ? Signedness::kSigned : Signedness::kUnsigned);
    return py::make_tuple(r.value, r.iterations);
  }, py::arg("a"), py::arg("b"), py::arg("a_width") = 8, py::arg("b_width") = 8, py::arg("signed") = true,
     py::arg("lanes") = 16);

  m.def("precision_sweep", [](const std::string& dist, const std::string& acc_format, int w_min, int w_max,
                              std::size_t samples, std::uint64_t seed, int sw_precision, int threads) {
    SweepSpec s;
    s.dist = parse_distribution(dist);
    s.acc_format = parse_float_format(acc_format);
    s.w_min = w_min;
    s.w_max = w_max;
    s.count = samples;
    s.seed = seed;
    s.sw_precision = sw_precision;
    s.threads = threads;
    std::vector<SweepRow> rows;
    {
      py::gil_scoped_release release;
      rows = precision_sweep(s);
    }
    py::list out;
    for (const SweepRow& r : rows) {
      py::dict d;
      d["w"] = r.w;
      d["median_abs_err"] = r.median_abs_err;
      d["median_are_pct"] = r.median_are_pct;
      d["median_contam_bits"] = r.median_contam_bits;
      d["mean_contam_bits"] = r.mean_contam_bits;
      d["samples"] = r.samples;
      out.append(d);
    }
    return out;
  }, py::arg("dist") = "normal", py::arg("acc_format") = "fp16", py::arg("w_min") = 9, py::arg("w_max") = 38,
     py::arg("samples") = 10000, py::arg("seed") = 1, py::arg("sw_precision") = kNoMasking,
     py::arg("threads") = 1);

  m.def("simulate_layer", [](const U16Array& ifm, const U16Array& weights, int stride, int padding,
                             const std::string& preset, int precision, int cluster_size, int buffer_depth,
                             bool compute_outputs) {
    if (ifm.ndim() != 3 || weights.ndim() != 4) throw ConfigError("ifm must be (C,H,W) and weights (K,C,R,S)");
    LayerData d;
    d.name = "layer";
    d.shape = {.c = static_cast<int>(ifm.shape(0)), .h = static_cast<int>(ifm.shape(1)),
               .w = static_cast<int>(ifm.shape(2)), .k = static_cast<int>(weights.shape(0)),
               .r = static_cast<int>(weights.shape(2)), .s = static_cast<int>(weights.shape(3)),
               .stride = stride, .padding = padding};
    if (weights.shape(1) != ifm.shape(0)) throw ConfigError("weights and ifm disagree on C");
    d.ifm = to_vector(ifm, static_cast<std::size_t>(ifm.size()), "ifm");
    d.weights = to_vector(weights, static_cast<std::size_t>(weights.size()), "weights");
    TileConfig t;
    if (preset == "small") t = TileConfig::small();
    else if (preset == "big") t = TileConfig::big();
    else throw ConfigError("unknown tile preset '" + preset + "'");
    t.precision = precision;
    if (cluster_size > 0) t.cluster_size = cluster_size;
    t.buffer_depth = buffer_depth;
    SimReport r;
    {
      py::gil_scoped_release release;
      r = simulate_layer(d, t, {.compute_outputs = compute_outputs});
    }
    py::dict out;
    out["total_cycles"] = r.total_cycles;
    out["baseline_cycles"] = r.baseline_cycles;
    out["stall_cycles"] = r.stall_cycles;
    out["normalized_time"] = r.normalized_time();
    out["pct_diffs_gt8"] = 100.0 * fraction_above(r.exp_diff_histogram, 8);
    out["exp_diff_histogram"] = std::vector<std::uint64_t>(r.exp_diff_histogram.begin(), r.exp_diff_histogram.end());
    if (compute_outputs) {
      py::array_t<std::uint16_t> ofm({d.shape.k, d.shape.out_h(), d.shape.out_w()});
      std::transform(r.outputs.begin(), r.outputs.end(), ofm.mutable_data(),
                     [](std::uint32_t v) { return static_cast<std::uint16_t>(v); });
      out["outputs"] = ofm;
    }
    return out;
  }, py::arg("ifm"), py::arg("weights"), py::arg("stride") = 1, py::arg("padding") = 0,
     py::arg("preset") = "small", py::arg("precision") = 16, py::arg("cluster_size") = 0,
     py::arg("buffer_depth") = 4, py::arg("compute_outputs") = true,
     "Simulates one convolution on an FP16-accumulating tile; tensors are FP16 bit patterns.");

  m.def("run_experiment", [](const std::string& json_text, std::optional<std::uint64_t> seed,
                             std::optional<std::string> workflow, std::optional<int> threads,
                             const std::string& base_dir) {
    Overrides o;
    o.seed = seed;
    o.workflow = workflow;
    o.threads = threads;
    const ExperimentConfig cfg = parse_experiment(json_text, o, base_dir);
    RunOutput r;
    {
      py::gil_scoped_release release;
      r = run_experiment(cfg);
    }
    return py::make_tuple(r.console, r.artifact);
  }, py::arg("config"), py::arg("seed") = py::none(), py::arg("workflow") = py::none(),
     py::arg("threads") = py::none(), py::arg("base_dir") = "",
     "Runs an experiment JSON document; returns (console text, artifact text).");
}
