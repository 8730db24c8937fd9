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

// Experiment files and the four workflows behind the command-line tool.
//
// An experiment is one JSON object. Top-level keys:
//
//   workflow   "trace-ipu" | "analyze-error" | "simulate-tile" | "sweep"
//   seed       u64 (default 1)
//   output     artifact path (CSV or JSON); stdout when absent
//   threads    worker count (never changes results)
//   ipu        {lanes, precision, sw_precision, depth_bits,
//               charge_empty_partitions, acc_format}
//   trace      {a: [...], b: [...]}      numbers or "0x3c00"-style FP16 bits
//   error      {dists, acc_formats, loc, scale, w_min, w_max, samples,
//               sw_precision}
//   tile       {preset, c_unroll, k_unroll, ho_unroll, wo_unroll,
//               cluster_size, buffer_depth, num_tiles, precision,
//               sw_precision, charge_empty_partitions, acc_format}
//   layers     [{name, c, h, w, k, r, s, stride, padding,
//                ifm, weights, ofm, synthetic}]
//   sweep      {precisions, cluster_sizes, buffer_depths}
//
// Unknown keys anywhere are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpipu/ipu.hpp"
#include "mpipu/sampling.hpp"
#include "mpipu/tile_sim.hpp"

namespace mpipu {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Workflow : std::uint8_t { kTraceIpu, kAnalyzeError, kSimulateTile, kSweep };

std::string_view to_string(Workflow w);
Workflow parse_workflow(std::string_view name);  // throws ConfigError

struct TraceSpec {
  std::vector<std::uint16_t> a;
  std::vector<std::uint16_t> b;
};

struct ErrorSpec {
  std::vector<Distribution> dists{Distribution::kNormal};
  std::vector<FloatFormat> formats{FloatFormat::kFp16};
  DistParams params;
  int w_min = 9;
  int w_max = 38;
  std::size_t samples = 100000;
  int sw_precision = kNoMasking;
};

struct LayerEntry {
  std::string name;
  LayerShape shape;
  std::optional<std::filesystem::path> ifm;      // TensorFile (C, H, W)
  std::optional<std::filesystem::path> weights;  // TensorFile (K, C, R, S)
  std::optional<std::filesystem::path> ofm;      // written by simulate-tile
  SyntheticSource synthetic;
};

struct DesignSweepSpec {
  std::vector<int> precisions{10, 12, 14, 16, 20, 24, 28, 38};
  std::vector<int> cluster_sizes{1, 2, 4, 8};
  std::vector<int> buffer_depths{4};
};

struct ExperimentConfig {
  Workflow workflow = Workflow::kTraceIpu;
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> output;
  int threads = 1;
  IpuConfig ipu;
  bool charge_empty_partitions = false;
  FloatFormat acc_format = FloatFormat::kFp16;
  TraceSpec trace;
  ErrorSpec error;
  TileConfig tile;
  std::vector<LayerEntry> layers;
  DesignSweepSpec sweep;
  std::uint64_t config_hash = 0;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> workflow;
  std::optional<std::filesystem::path> output;
  std::optional<int> threads;
};

std::uint64_t fnv1a64(std::string_view bytes);

// Relative tensor paths resolve against base_dir. Throws ConfigError.
ExperimentConfig parse_experiment(std::string_view json_text, const Overrides& overrides = {},
                                  const std::filesystem::path& base_dir = {});

// "# mpipu <version> config_hash=<hex> seed=<n>"
std::string meta_line(const ExperimentConfig& cfg);

struct RunOutput {
  std::string console;   // human-readable text for stdout
  std::string artifact;  // CSV or JSON document
};

// Runs the workflow without touching the output path.
RunOutput run_experiment(const ExperimentConfig& cfg);

// Materializes a layer's tensors (file or synthetic). Throws IoError/ConfigError.
LayerData load_layer(const LayerEntry& entry);

}  // namespace mpipu
