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

// Cycle-accurate model of IP-based convolution tiles built from MC-IPUs.
//
// Mapping (weight stationary): each IPU owns one output pixel (k, oh, ow) of
// the current wave, the tile unrolls (K, Ho, Wo) over its IPUs and C over the
// IPU lanes. A wave walks its reduction in (r, s, c-block) order; each such
// step is one FP-IP per IPU, i.e. nine nibble iterations that each take as
// many cycles as the IPU's alignment schedule. Waves are dealt round-robin
// to tiles; tiles run independently with ideal memory.
//
// Within a tile, IPUs are grouped into clusters of consecutive IPU indices.
// A cluster runs a step in max-over-members cycles. Steps are broadcast to
// every cluster's input queue (depth D) and the broadcast stops while any
// queue is full; results go through per-cluster output queues (depth D) that
// drain once every cluster has finished the step.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mpipu/alignment.hpp"
#include "mpipu/fp_codec.hpp"
#include "mpipu/ipu.hpp"
#include "mpipu/sampling.hpp"

namespace mpipu {

struct TileConfig {
  int c_unroll = 8;  // lanes per IPU (n)
  int k_unroll = 8;
  int ho_unroll = 2;
  int wo_unroll = 2;
  int cluster_size = 32;  // MC-IPUs per cluster
  int buffer_depth = 4;
  int num_tiles = 4;
  int precision = 16;     // w of every MC-IPU
  int sw_precision = 16;  // 16 for FP16 accumulation, 27 for FP32
  bool charge_empty_partitions = false;
  FloatFormat acc_format = FloatFormat::kFp16;

  int ipus_per_tile() const { return k_unroll * ho_unroll * wo_unroll; }
  int clusters() const { return ipus_per_tile() / cluster_size; }
  IpuConfig ipu_config() const;
  void validate() const;  // throws ConfigError

  static TileConfig small();  // (8, 8, 2, 2)
  static TileConfig big();    // (16, 16, 2, 2)
};

struct LayerShape {
  int c = 1, h = 1, w = 1;  // input feature map
  int k = 1, r = 1, s = 1;  // kernel (K, C, R, S)
  int stride = 1;
  int padding = 0;

  int out_h() const { return (h + 2 * padding - r) / stride + 1; }
  int out_w() const { return (w + 2 * padding - s) / stride + 1; }
  std::uint64_t macs() const;
  void validate() const;  // throws ConfigError
};

// FP16 bit patterns: ifm is (C, H, W), weights (K, C, R, S), row-major.
struct LayerData {
  std::string name;
  LayerShape shape;
  std::vector<std::uint16_t> ifm;
  std::vector<std::uint16_t> weights;

  void validate() const;
};

struct SyntheticSource {
  Distribution dist = Distribution::kNormal;
  DistParams activations;
  DistParams weights;
  std::uint64_t seed = 1;
};

LayerData synthesize_layer(const std::string& name, const LayerShape& shape,
                           const SyntheticSource& source);

inline constexpr int kHistogramBins = kMaxAlignment + 1;
using DiffHistogram = std::array<std::uint64_t, kHistogramBins>;

double fraction_above(const DiffHistogram& h, int diff);

struct SimOptions {
  bool compute_outputs = true;
};

struct SimReport {
  std::uint64_t total_cycles = 0;
  std::uint64_t baseline_cycles = 0;
  std::uint64_t stall_cycles = 0;  // total - baseline
  std::vector<std::uint64_t> cycles_per_cluster;  // busy cycles, summed over tiles
  DiffHistogram exp_diff_histogram{};
  double mean_cycles_per_iteration = 0;  // over (tile, step, cluster)
  std::uint64_t multiply_count = 0;
  std::uint64_t steps = 0;
  std::vector<std::uint32_t> outputs;  // (K, OH, OW) result bits, empty unless computed

  double normalized_time() const {
    return baseline_cycles == 0 ? 0.0
                                : static_cast<double>(total_cycles) / static_cast<double>(baseline_cycles);
  }
};

// Throws ConfigError for invalid layer/tile combinations and NumericError for
// inf/nan tensor values.
SimReport simulate_layer(const LayerData& layer, const TileConfig& tile,
                         const SimOptions& opts = {});

// Single-cycle-per-iteration count for the same mapping.
std::uint64_t baseline_cycles(const LayerShape& shape, const TileConfig& tile);

DiffHistogram exp_diff_histogram(const LayerData& layer, const TileConfig& tile);

// Reduction operands of one output pixel in tile order: for each (r, s) the
// channels are padded with zeros to a multiple of c_unroll. Feeding them to
// fp_ip_approx with the multi-cycle datapath reproduces the simulated output.
void pixel_operands(const LayerData& layer, int c_unroll, int k, int oh, int ow,
                    std::vector<Fp16Value>& a, std::vector<Fp16Value>& b);

struct DesignPoint {
  std::string layer;
  int w = 0;
  int cluster_size = 0;
  int buffer_depth = 0;
  std::uint64_t total_cycles = 0;
  std::uint64_t baseline_cycles = 0;
  double normalized_time = 0;
  double pct_diffs_gt8 = 0;
};

inline constexpr const char* kSimCsvHeader =
    "layer,w,cluster_size,buffer_depth,total_cycles,baseline_cycles,normalized_time,pct_diffs_gt8";

DesignPoint design_point(const LayerData& layer, const TileConfig& tile, const SimReport& r);
std::string sim_csv_row(const DesignPoint& p);

// Every (layer, w, cluster size) combination on top of `base`, timing only.
std::vector<DesignPoint> sweep_design_space(const std::vector<LayerData>& layers,
                                            const std::vector<int>& precisions,
                                            const std::vector<int>& cluster_sizes,
                                            const TileConfig& base, int threads = 1);

}  // namespace mpipu
