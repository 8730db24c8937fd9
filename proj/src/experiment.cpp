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

#include "mpipu/experiment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mpipu/errors.hpp"
#include "mpipu/precision_study.hpp"
#include "mpipu/tensor_file.hpp"

namespace mpipu {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void check_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

std::int64_t get_int(const json& j, const std::string& where, const char* key, std::int64_t def,
                     std::int64_t lo, std::int64_t hi) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  const std::int64_t x = v.is_number_unsigned() && v.get<std::uint64_t>() > std::numeric_limits<std::int64_t>::max()
                             ? hi + 1
                             : v.get<std::int64_t>();
  if (x < lo || x > hi) {
    throw ConfigError(where + "." + key + ": " + std::to_string(x) + " outside [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return x;
}

int get_i(const json& j, const std::string& where, const char* key, int def, int lo, int hi) {
  return static_cast<int>(get_int(j, where, key, def, lo, hi));
}

double get_double(const json& j, const std::string& where, const char* key, double def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

bool get_bool(const json& j, const std::string& where, const char* key, bool def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_boolean()) throw ConfigError(where + "." + key + ": expected true/false");
  return j.at(key).get<bool>();
}

std::string get_str(const json& j, const std::string& where, const char* key, std::string def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return j.at(key).get<std::string>();
}

std::vector<int> get_int_list(const json& j, const std::string& where, const char* key,
                              std::vector<int> def, int lo, int hi) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_array() || v.empty()) throw ConfigError(where + "." + key + ": expected a non-empty array");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    json holder{{"v", v[i]}};
    out.push_back(get_i(holder, where + "." + key + "[" + std::to_string(i) + "]", "v", 0, lo, hi));
  }
  return out;
}

std::vector<std::string> get_str_list(const json& j, const std::string& where, const char* key,
                                      std::vector<std::string> def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array() || v.empty()) throw ConfigError(where + "." + key + ": expected a string or array");
  std::vector<std::string> out;
  for (const json& e : v) {
    if (!e.is_string()) throw ConfigError(where + "." + key + ": expected strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::uint16_t parse_operand(const json& v, const std::string& where) {
  if (v.is_number()) return double_to_fp16(v.get<double>());
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.size() > 2 && s.size() <= 6 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
      std::size_t used = 0;
      unsigned long bits = 0;
      try {
        bits = std::stoul(s.substr(2), &used, 16);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == s.size() - 2) return static_cast<std::uint16_t>(bits);
    }
    throw ConfigError(where + ": bad FP16 bit pattern '" + s + "'");
  }
  throw ConfigError(where + ": expected a number or \"0x....\" string");
}

std::vector<std::uint16_t> parse_operands(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) throw ConfigError(where + "." + key + ": expected an array");
  std::vector<std::uint16_t> out;
  const json& arr = j.at(key);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(parse_operand(arr[i], where + "." + key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void parse_ipu(const json& j, ExperimentConfig& cfg) {
  const std::string w = "ipu";
  check_keys(j, w, {"lanes", "precision", "sw_precision", "depth_bits", "charge_empty_partitions", "acc_format"});
  cfg.ipu.lanes = get_i(j, w, "lanes", cfg.ipu.lanes, 1, 32);
  cfg.ipu.precision = get_i(j, w, "precision", cfg.ipu.precision, kProductBits, 38);
  cfg.ipu.sw_precision = get_i(j, w, "sw_precision", cfg.ipu.sw_precision, 1, kNoMasking);
  cfg.ipu.depth_bits = get_i(j, w, "depth_bits", cfg.ipu.depth_bits, 0, 24);
  cfg.charge_empty_partitions = get_bool(j, w, "charge_empty_partitions", false);
  cfg.acc_format = parse_float_format(get_str(j, w, "acc_format", "fp16"));
}

void parse_error(const json& j, ExperimentConfig& cfg) {
  const std::string w = "error";
  check_keys(j, w, {"dists", "acc_formats", "loc", "scale", "w_min", "w_max", "samples", "sw_precision"});
  ErrorSpec& e = cfg.error;
  e.dists.clear();
  for (const auto& d : get_str_list(j, w, "dists", {"normal"})) e.dists.push_back(parse_distribution(d));
  e.formats.clear();
  for (const auto& f : get_str_list(j, w, "acc_formats", {"fp16"})) e.formats.push_back(parse_float_format(f));
  e.params.loc = get_double(j, w, "loc", 0.0);
  e.params.scale = get_double(j, w, "scale", 1.0);
  if (!(e.params.scale > 0)) throw ConfigError("error.scale must be > 0");
  e.w_min = get_i(j, w, "w_min", e.w_min, kProductBits, 38);
  e.w_max = get_i(j, w, "w_max", e.w_max, kProductBits, 38);
  if (e.w_min > e.w_max) throw ConfigError("error.w_min exceeds error.w_max");
  e.samples = static_cast<std::size_t>(get_int(j, w, "samples", 100000, 1, 100000000));
  e.sw_precision = get_i(j, w, "sw_precision", kNoMasking, 1, kNoMasking);
}

void parse_tile(const json& j, ExperimentConfig& cfg) {
  const std::string w = "tile";
  check_keys(j, w, {"preset", "c_unroll", "k_unroll", "ho_unroll", "wo_unroll", "cluster_size",
                    "buffer_depth", "num_tiles", "precision", "sw_precision",
                    "charge_empty_partitions", "acc_format"});
  const std::string preset = get_str(j, w, "preset", "small");
  TileConfig t;
  if (preset == "small") {
    t = TileConfig::small();
  } else if (preset == "big") {
    t = TileConfig::big();
  } else {
    throw ConfigError("tile.preset must be 'small' or 'big'");
  }
  t.c_unroll = get_i(j, w, "c_unroll", t.c_unroll, 1, 32);
  t.k_unroll = get_i(j, w, "k_unroll", t.k_unroll, 1, 4096);
  t.ho_unroll = get_i(j, w, "ho_unroll", t.ho_unroll, 1, 4096);
  t.wo_unroll = get_i(j, w, "wo_unroll", t.wo_unroll, 1, 4096);
  t.cluster_size = get_i(j, w, "cluster_size", t.ipus_per_tile(), 1, 1 << 24);
  t.buffer_depth = get_i(j, w, "buffer_depth", t.buffer_depth, 1, 1 << 20);
  t.num_tiles = get_i(j, w, "num_tiles", t.num_tiles, 1, 4096);
  t.precision = get_i(j, w, "precision", t.precision, kProductBits + 1, 38);
  t.acc_format = parse_float_format(get_str(j, w, "acc_format", "fp16"));
  t.sw_precision = get_i(j, w, "sw_precision", t.acc_format == FloatFormat::kFp16 ? 16 : 27, 1, kNoMasking);
  t.charge_empty_partitions = get_bool(j, w, "charge_empty_partitions", false);
  t.validate();
  cfg.tile = t;
}

// SplitMix64 step: decorrelates per-layer streams from the run seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void parse_layers(const json& j, ExperimentConfig& cfg, const std::filesystem::path& base) {
  if (!j.is_array() || j.empty()) throw ConfigError("layers: expected a non-empty array");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = "layers[" + std::to_string(i) + "]";
    const json& l = j[i];
    check_keys(l, w, {"name", "c", "h", "w", "k", "r", "s", "stride", "padding", "ifm", "weights",
                      "ofm", "synthetic"});
    LayerEntry e;
    e.name = get_str(l, w, "name", "layer" + std::to_string(i));
    if (e.name.find_first_of(",\"\n") != std::string::npos) throw ConfigError(w + ".name: no commas, quotes or newlines");
    constexpr int kDimMax = 1 << 16;
    e.shape.c = get_i(l, w, "c", 1, 1, kDimMax);
    e.shape.h = get_i(l, w, "h", 1, 1, kDimMax);
    e.shape.w = get_i(l, w, "w", 1, 1, kDimMax);
    e.shape.k = get_i(l, w, "k", 1, 1, kDimMax);
    e.shape.r = get_i(l, w, "r", 1, 1, 64);
    e.shape.s = get_i(l, w, "s", 1, 1, 64);
    e.shape.stride = get_i(l, w, "stride", 1, 1, 64);
    e.shape.padding = get_i(l, w, "padding", 0, 0, 64);
    e.shape.validate();
    if (l.contains("ifm") != l.contains("weights")) throw ConfigError(w + ": give both ifm and weights or neither");
    if (l.contains("ifm")) {
      if (l.contains("synthetic")) throw ConfigError(w + ": tensor files and synthetic are exclusive");
      e.ifm = resolve(base, get_str(l, w, "ifm", ""));
      e.weights = resolve(base, get_str(l, w, "weights", ""));
    }
    if (l.contains("ofm")) e.ofm = resolve(base, get_str(l, w, "ofm", ""));
    e.synthetic.seed = mix_seed(cfg.seed, i);
    if (l.contains("synthetic")) {
      const json& s = l.at("synthetic");
      const std::string sw = w + ".synthetic";
      check_keys(s, sw, {"dist", "act_loc", "act_scale", "weight_loc", "weight_scale"});
      e.synthetic.dist = parse_distribution(get_str(s, sw, "dist", "normal"));
      e.synthetic.activations = {get_double(s, sw, "act_loc", 0.0), get_double(s, sw, "act_scale", 1.0)};
      e.synthetic.weights = {get_double(s, sw, "weight_loc", 0.0), get_double(s, sw, "weight_scale", 1.0)};
      if (!(e.synthetic.activations.scale > 0) || !(e.synthetic.weights.scale > 0)) {
        throw ConfigError(sw + ": scales must be > 0");
      }
    }
    cfg.layers.push_back(std::move(e));
  }
}

void parse_sweep(const json& j, ExperimentConfig& cfg) {
  const std::string w = "sweep";
  check_keys(j, w, {"precisions", "cluster_sizes", "buffer_depths"});
  cfg.sweep.precisions = get_int_list(j, w, "precisions", cfg.sweep.precisions, kProductBits + 1, 38);
  cfg.sweep.cluster_sizes = get_int_list(j, w, "cluster_sizes", cfg.sweep.cluster_sizes, 1, 1 << 24);
  cfg.sweep.buffer_depths = get_int_list(j, w, "buffer_depths", cfg.sweep.buffer_depths, 1, 1 << 20);
  for (int cs : cfg.sweep.cluster_sizes) {
    TileConfig t = cfg.tile;
    t.cluster_size = cs;
    t.validate();
  }
}

std::string hex16(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%04" PRIx32, v);
  return buf;
}

std::string hex_bits(std::uint32_t v, FloatFormat f) {
  char buf[16];
  std::snprintf(buf, sizeof buf, f == FloatFormat::kFp16 ? "0x%04" PRIx32 : "0x%08" PRIx32, v);
  return buf;
}

std::string lane_name(int k) {
  if (k < 26) return std::string(1, static_cast<char>('A' + k));
  return "L" + std::to_string(k);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// --- workflows -------------------------------------------------------------

RunOutput run_trace(const ExperimentConfig& cfg) {
  const IpuConfig& ipu = cfg.ipu;
  if (ipu.lanes > 16) throw ConfigError("trace-ipu supports at most 16 lanes");
  if (ipu.precision < kProductBits + 1) throw ConfigError("trace-ipu needs precision >= 10");
  const auto& ta = cfg.trace.a;
  const auto& tb = cfg.trace.b;
  if (ta.empty() || ta.size() != tb.size()) throw ConfigError("trace.a and trace.b must be equal-length, non-empty");

  std::vector<Fp16Value> a, b;
  for (std::size_t k = 0; k < ta.size(); ++k) {
    a.push_back(decode_fp16(ta[k]));
    b.push_back(decode_fp16(tb[k]));
    if (!a.back().finite() || !b.back().finite()) {
      throw NumericError("trace operand " + std::to_string(k) + " is inf or nan");
    }
  }

  const int sp = ipu.safe_precision();
  std::ostringstream txt;
  txt << meta_line(cfg) << "\n";
  txt << "ipu lanes=" << ipu.lanes << " w=" << ipu.precision << " sp=" << sp
      << " sw_precision=" << ipu.sw_precision
      << " charge_empty_partitions=" << (cfg.charge_empty_partitions ? "true" : "false")
      << " acc_format=" << to_string(cfg.acc_format) << "\n";

  ordered_json doc;
  doc["tool"] = "mpipu";
  doc["version"] = kToolVersion;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, cfg.config_hash);
  doc["config_hash"] = hash;
  doc["seed"] = cfg.seed;
  doc["ipu"] = {{"lanes", ipu.lanes},
                {"precision", ipu.precision},
                {"sp", sp},
                {"sw_precision", ipu.sw_precision},
                {"charge_empty_partitions", cfg.charge_empty_partitions},
                {"acc_format", to_string(cfg.acc_format)}};
  doc["ops"] = ordered_json::array();

  AccumulatorState acc;
  const std::size_t n = a.size();
  for (std::size_t first = 0, op = 0; first < n; first += ipu.lanes, ++op) {
    const int len = static_cast<int>(std::min<std::size_t>(ipu.lanes, n - first));
    std::vector<DecomposedOperand> da(len), db(len);
    std::vector<int> pexp(len);
    LaneMask zeros = 0;
    for (int k = 0; k < len; ++k) {
      da[k] = decompose_fp16(a[first + k]);
      db[k] = decompose_fp16(b[first + k]);
      pexp[k] = a[first + k].exp + b[first + k].exp;
      if (a[first + k].is_zero() || b[first + k].is_zero()) zeros |= lane_bit(k);
    }
    txt << "op " << op << "\n";
    ordered_json jop;
    jop["op"] = op;
    jop["lanes"] = ordered_json::array();
    if (zeros == all_lanes(len)) {
      txt << "  all products zero, skipped\n";
      jop["skipped"] = true;
      doc["ops"].push_back(jop);
      continue;
    }
    const AlignmentDiffs ad = alignment_diffs(pexp, zeros);
    const LaneMask sw_mask = mask_beyond_precision(ad.diffs, ipu.sw_precision) & ~zeros;
    const LaneMask mask = sw_mask | zeros;
    const AlignmentSchedule sched = schedule_cycles(ad.diffs, mask, sp, cfg.charge_empty_partitions);

    txt << "  lane a      b      a_exp b_exp exp diff mask\n";
    for (int k = 0; k < len; ++k) {
      const char* why = lane_set(zeros, k) ? "zero" : lane_set(sw_mask, k) ? "sw" : "-";
      char line[128];
      std::snprintf(line, sizeof line, "  %-4s %s %s %5d %5d %3d %4d %s\n", lane_name(k).c_str(),
                    hex16(ta[first + k]).c_str(), hex16(tb[first + k]).c_str(), a[first + k].exp,
                    b[first + k].exp, pexp[k], ad.diffs[k], why);
      txt << line;
      jop["lanes"].push_back({{"lane", lane_name(k)},
                              {"a", hex16(ta[first + k])},
                              {"b", hex16(tb[first + k])},
                              {"a_exp", a[first + k].exp},
                              {"b_exp", b[first + k].exp},
                              {"exp", pexp[k]},
                              {"diff", ad.diffs[k]},
                              {"mask", why}});
    }
    txt << "  max_exp " << ad.max_exp << ", " << sched.issue_cycles() << " cycle(s) per nibble iteration\n";
    jop["max_exp"] = ad.max_exp;
    jop["cycles_per_iteration"] = sched.issue_cycles();
    jop["schedule"] = ordered_json::array();
    for (std::size_t c = 0; c < sched.cycles.size(); ++c) {
      const AlignmentCycle& cyc = sched.cycles[c];
      std::string served, shifts;
      ordered_json jserved = ordered_json::array();
      ordered_json jshift = ordered_json::array();
      for (int k = 0; k < len; ++k) {
        if (!lane_set(cyc.served, k)) continue;
        served += (served.empty() ? "" : ",") + lane_name(k);
        shifts += (shifts.empty() ? "" : ",") + std::to_string(cyc.local_shifts[k]);
        jserved.push_back(lane_name(k));
        jshift.push_back(cyc.local_shifts[k]);
      }
      txt << "  cycle " << c << ": served {" << served << "} local_shifts (" << shifts
          << ") extra_shift " << cyc.extra_shift << "\n";
      jop["schedule"].push_back({{"cycle", c},
                                 {"partition", cyc.partition},
                                 {"served", jserved},
                                 {"local_shifts", jshift},
                                 {"extra_shift", cyc.extra_shift}});
    }
    jop["iterations"] = ordered_json::array();
    for (int i = kFpNibbles - 1; i >= 0; --i) {
      for (int j = kFpNibbles - 1; j >= 0; --j) {
        txt << "  iteration (" << i << "," << j << ")\n";
        ordered_json steps = ordered_json::array();
        for (std::size_t c = 0; c < sched.cycles.size(); ++c) {
          const AlignmentCycle& cyc = sched.cycles[c];
          if (cyc.served == 0) {
            txt << "    cycle " << c << ": idle\n";
            steps.push_back({{"cycle", c}, {"idle", true}});
            continue;
          }
          const IterationResult r = mc_nibble_iteration(da, db, i, j, cyc, ad.max_exp, ipu);
          acc = accumulate_fp(acc, r, i, j, ipu);
          txt << "    cycle " << c << ": adder_out " << r.adder_out << " extra_shift " << r.extra_shift
              << " acc exp " << acc.exp << " mag " << acc.mag << "\n";
          steps.push_back({{"cycle", c},
                           {"adder_out", r.adder_out},
                           {"extra_shift", r.extra_shift},
                           {"acc_exp", acc.exp},
                           {"acc_mag", acc.mag}});
        }
        jop["iterations"].push_back({{"i", i}, {"j", j}, {"steps", steps}});
      }
    }
    doc["ops"].push_back(jop);
  }
  const std::uint32_t bits = round_accumulator(acc, cfg.acc_format);
  const double value = bits_to_double(bits, cfg.acc_format);
  txt << "result " << to_string(cfg.acc_format) << " " << hex_bits(bits, cfg.acc_format) << " = "
      << fmt_double(value) << "\n";
  doc["result"] = {{"format", to_string(cfg.acc_format)},
                   {"bits", hex_bits(bits, cfg.acc_format)},
                   {"value", fmt_double(value)}};
  return {txt.str(), doc.dump(2) + "\n"};
}

RunOutput run_error(const ExperimentConfig& cfg) {
  std::string csv = meta_line(cfg) + "\n" + kSweepCsvHeader + "\n";
  for (Distribution d : cfg.error.dists) {
    for (FloatFormat f : cfg.error.formats) {
      SweepSpec spec;
      spec.dist = d;
      spec.params = cfg.error.params;
      spec.acc_format = f;
      spec.w_min = cfg.error.w_min;
      spec.w_max = cfg.error.w_max;
      spec.lanes = cfg.ipu.lanes;
      spec.sw_precision = cfg.error.sw_precision;
      spec.count = cfg.error.samples;
      spec.seed = cfg.seed;
      spec.threads = cfg.threads;
      for (const SweepRow& row : precision_sweep(spec)) csv += sweep_csv_row(row) + "\n";
    }
  }
  return {"analyze-error: " + std::to_string(cfg.error.dists.size() * cfg.error.formats.size()) +
              " sweep(s) done\n",
          csv};
}

void require_layers(const ExperimentConfig& cfg) {
  if (cfg.layers.empty()) throw ConfigError("workflow needs a non-empty 'layers' list");
}

RunOutput run_simulate(const ExperimentConfig& cfg) {
  require_layers(cfg);
  std::string csv = meta_line(cfg) + "\n" + kSimCsvHeader + "\n";
  std::ostringstream txt;
  for (const LayerEntry& e : cfg.layers) {
    const LayerData layer = load_layer(e);
    const SimReport r = simulate_layer(layer, cfg.tile, SimOptions{.compute_outputs = e.ofm.has_value()});
    const DesignPoint p = design_point(layer, cfg.tile, r);
    csv += sim_csv_row(p) + "\n";
    txt << e.name << ": " << r.total_cycles << " cycles, baseline " << r.baseline_cycles
        << ", normalized " << fmt_double(p.normalized_time) << "\n";
    if (e.ofm) {
      if (cfg.tile.acc_format != FloatFormat::kFp16) throw ConfigError(e.name + ": ofm output requires fp16 accumulation");
      Tensor t;
      t.dims = {static_cast<std::uint64_t>(layer.shape.k), static_cast<std::uint64_t>(layer.shape.out_h()),
                static_cast<std::uint64_t>(layer.shape.out_w())};
      t.data.assign(r.outputs.begin(), r.outputs.end());
      write_tensor_file(*e.ofm, t);
    }
  }
  return {txt.str(), csv};
}

RunOutput run_sweep(const ExperimentConfig& cfg) {
  require_layers(cfg);
  std::vector<LayerData> layers;
  for (const LayerEntry& e : cfg.layers) layers.push_back(load_layer(e));
  std::string csv = meta_line(cfg) + "\n" + kSimCsvHeader + "\n";
  for (int depth : cfg.sweep.buffer_depths) {
    TileConfig base = cfg.tile;
    base.buffer_depth = depth;
    for (const DesignPoint& p :
         sweep_design_space(layers, cfg.sweep.precisions, cfg.sweep.cluster_sizes, base, cfg.threads)) {
      csv += sim_csv_row(p) + "\n";
    }
  }
  return {"sweep: " + std::to_string(layers.size()) + " layer(s) done\n", csv};
}

}  // namespace

std::string_view to_string(Workflow w) {
  switch (w) {
    case Workflow::kTraceIpu: return "trace-ipu";
    case Workflow::kAnalyzeError: return "analyze-error";
    case Workflow::kSimulateTile: return "simulate-tile";
    case Workflow::kSweep: return "sweep";
  }
  return "?";
}

Workflow parse_workflow(std::string_view name) {
  for (Workflow w : {Workflow::kTraceIpu, Workflow::kAnalyzeError, Workflow::kSimulateTile, Workflow::kSweep}) {
    if (to_string(w) == name) return w;
  }
  throw ConfigError("unknown workflow '" + std::string(name) + "'");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

ExperimentConfig parse_experiment(std::string_view json_text, const Overrides& overrides,
                                  const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"workflow", "seed", "output", "threads", "ipu", "trace", "error", "tile",
                           "layers", "sweep"});
  if (overrides.seed) j["seed"] = *overrides.seed;
  if (overrides.workflow) j["workflow"] = *overrides.workflow;

  ExperimentConfig cfg;
  if (!j.contains("workflow")) throw ConfigError("config: 'workflow' is required");
  cfg.workflow = parse_workflow(get_str(j, "config", "workflow", ""));
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !(j.at("seed").is_number_integer() && j.at("seed").get<std::int64_t>() >= 0)) {
      throw ConfigError("config.seed: expected a non-negative integer");
    }
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("output")) cfg.output = resolve(base_dir, get_str(j, "config", "output", ""));
  if (overrides.output) cfg.output = *overrides.output;
  cfg.threads = get_i(j, "config", "threads", 1, 1, 1024);
  if (overrides.threads) {
    if (*overrides.threads < 1) throw ConfigError("--threads must be >= 1");
    cfg.threads = *overrides.threads;
  }

  try {
    if (j.contains("ipu")) parse_ipu(j.at("ipu"), cfg);
    cfg.ipu.validate();
    if (j.contains("trace")) {
      check_keys(j.at("trace"), "trace", {"a", "b"});
      cfg.trace.a = parse_operands(j.at("trace"), "trace", "a");
      cfg.trace.b = parse_operands(j.at("trace"), "trace", "b");
    }
    if (j.contains("error")) parse_error(j.at("error"), cfg);
    if (j.contains("tile")) {
      parse_tile(j.at("tile"), cfg);
    } else {
      cfg.tile.validate();
    }
    if (j.contains("layers")) parse_layers(j.at("layers"), cfg, base_dir);
    if (j.contains("sweep")) parse_sweep(j.at("sweep"), cfg);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.workflow == Workflow::kTraceIpu && cfg.trace.a.empty()) {
    throw ConfigError("trace-ipu needs a 'trace' section");
  }

  // Execution details that never change results stay out of the hash.
  j.erase("threads");
  j.erase("output");
  j["seed"] = cfg.seed;
  cfg.config_hash = fnv1a64(j.dump());
  return cfg;
}

std::string meta_line(const ExperimentConfig& cfg) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "# mpipu %s config_hash=%016" PRIx64 " seed=%" PRIu64, kToolVersion,
                cfg.config_hash, cfg.seed);
  return buf;
}

LayerData load_layer(const LayerEntry& entry) {
  if (!entry.ifm) return synthesize_layer(entry.name, entry.shape, entry.synthetic);
  const LayerShape& sh = entry.shape;
  const Tensor ifm = read_tensor_file(*entry.ifm);
  const Tensor wt = read_tensor_file(*entry.weights);
  const std::vector<std::uint64_t> want_ifm{static_cast<std::uint64_t>(sh.c), static_cast<std::uint64_t>(sh.h),
                                            static_cast<std::uint64_t>(sh.w)};
  const std::vector<std::uint64_t> want_wt{static_cast<std::uint64_t>(sh.k), static_cast<std::uint64_t>(sh.c),
                                           static_cast<std::uint64_t>(sh.r), static_cast<std::uint64_t>(sh.s)};
  if (ifm.dims != want_ifm) throw ConfigError(entry.name + ": ifm tensor dims do not match (C, H, W)");
  if (wt.dims != want_wt) throw ConfigError(entry.name + ": weight tensor dims do not match (K, C, R, S)");
  LayerData d;
  d.name = entry.name;
  d.shape = sh;
  d.ifm = ifm.data;
  d.weights = wt.data;
  return d;
}

RunOutput run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.workflow) {
    case Workflow::kTraceIpu: return run_trace(cfg);
    case Workflow::kAnalyzeError: return run_error(cfg);
    case Workflow::kSimulateTile: return run_simulate(cfg);
    case Workflow::kSweep: return run_sweep(cfg);
  }
  throw ConfigError("unknown workflow");
}

}  // namespace mpipu
