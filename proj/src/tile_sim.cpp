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

#include "mpipu/tile_sim.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <memory>

#include "mpipu/errors.hpp"
#include "mpipu/parallel.hpp"

namespace mpipu {

namespace {

constexpr int kIterations = kFpNibbles * kFpNibbles;

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

bool pow2(int v) { return v > 0 && std::has_single_bit(static_cast<unsigned>(v)); }

struct Wave {
  int k0, oh0, ow0;
};

// Per-tile step costs, cluster-major within a step.
struct TileTrace {
  std::vector<int> cost;  // [step * clusters + cluster], cycles
  std::size_t steps = 0;
};

// Max-plus recurrence over the broadcast/queue model. B(s) is when step s is
// broadcast, Start_c(s) when cluster c begins it, F_c(s) when it finishes and
// W(s) when step s leaves the output queues.
std::uint64_t run_queues(const TileTrace& t, int clusters, int depth,
                         std::vector<std::uint64_t>& busy) {
  if (t.steps == 0) return 0;
  const std::size_t d = static_cast<std::size_t>(depth);
  std::vector<std::uint64_t> bcast(t.steps);
  std::vector<std::uint64_t> start(t.steps * clusters);
  std::vector<std::uint64_t> fin_prev(clusters, 0);
  std::vector<std::uint64_t> done(t.steps);
  for (std::size_t s = 0; s < t.steps; ++s) {
    std::uint64_t b = s == 0 ? 0 : bcast[s - 1] + 1;
    if (s >= d) {
      for (int c = 0; c < clusters; ++c) b = std::max(b, start[(s - d) * clusters + c]);
    }
    bcast[s] = b;
    std::uint64_t w = 0;
    for (int c = 0; c < clusters; ++c) {
      std::uint64_t st = std::max(b, fin_prev[c]);
      if (s >= d) st = std::max(st, done[s - d]);
      start[s * clusters + c] = st;
      const int cost = t.cost[s * clusters + c];
      fin_prev[c] = st + static_cast<std::uint64_t>(cost);
      busy[c] += static_cast<std::uint64_t>(cost);
      w = std::max(w, fin_prev[c]);
    }
    done[s] = w;
  }
  return done.back();
}

}  // namespace

IpuConfig TileConfig::ipu_config() const {
  IpuConfig cfg;
  cfg.lanes = c_unroll;
  cfg.precision = precision;
  cfg.sw_precision = sw_precision;
  return cfg;
}

void TileConfig::validate() const {
  if (!pow2(c_unroll) || c_unroll > 32) throw ConfigError("c_unroll must be a power of two <= 32");
  if (k_unroll < 1 || ho_unroll < 1 || wo_unroll < 1) throw ConfigError("unroll factors must be >= 1");
  if (cluster_size < 1 || ipus_per_tile() % cluster_size != 0) {
    throw ConfigError("cluster_size must divide the IPUs per tile (" +
                      std::to_string(ipus_per_tile()) + ")");
  }
  if (buffer_depth < 1) throw ConfigError("buffer_depth must be >= 1");
  if (num_tiles < 1) throw ConfigError("num_tiles must be >= 1");
  if (precision < kProductBits + 1 || precision > 38) {
    throw ConfigError("tile precision must lie in [10, 38]");
  }
  ipu_config().validate();
}

TileConfig TileConfig::small() { return TileConfig{}; }

TileConfig TileConfig::big() {
  TileConfig t;
  t.c_unroll = 16;
  t.k_unroll = 16;
  t.cluster_size = 64;
  return t;
}

std::uint64_t LayerShape::macs() const {
  return static_cast<std::uint64_t>(k) * out_h() * out_w() * c * r * s;
}

void LayerShape::validate() const {
  if (c < 1 || h < 1 || w < 1 || k < 1 || r < 1 || s < 1) {
    throw ConfigError("layer dimensions must be >= 1");
  }
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (padding < 0) throw ConfigError("padding must be >= 0");
  if (h + 2 * padding < r || w + 2 * padding < s) throw ConfigError("kernel larger than padded input");
}

void LayerData::validate() const {
  shape.validate();
  const std::size_t ifm_n = static_cast<std::size_t>(shape.c) * shape.h * shape.w;
  const std::size_t wt_n = static_cast<std::size_t>(shape.k) * shape.c * shape.r * shape.s;
  if (ifm.size() != ifm_n) throw ConfigError("ifm size does not match layer shape");
  if (weights.size() != wt_n) throw ConfigError("weight size does not match layer shape");
}

LayerData synthesize_layer(const std::string& name, const LayerShape& shape,
                           const SyntheticSource& source) {
  shape.validate();
  LayerData d;
  d.name = name;
  d.shape = shape;
  d.ifm.resize(static_cast<std::size_t>(shape.c) * shape.h * shape.w);
  d.weights.resize(static_cast<std::size_t>(shape.k) * shape.c * shape.r * shape.s);
  Sampler act(source.dist, source.activations, source.seed, 0);
  Sampler wt(source.dist, source.weights, source.seed, 1);
  for (auto& v : d.ifm) v = act.next_fp16();
  for (auto& v : d.weights) v = wt.next_fp16();
  return d;
}

double fraction_above(const DiffHistogram& h, int diff) {
  std::uint64_t total = 0, above = 0;
  for (int i = 0; i < kHistogramBins; ++i) {
    total += h[i];
    if (i > diff) above += h[i];
  }
  return total == 0 ? 0.0 : static_cast<double>(above) / static_cast<double>(total);
}

std::uint64_t baseline_cycles(const LayerShape& shape, const TileConfig& tile) {
  const std::uint64_t waves = ceil_div(shape.k, tile.k_unroll) *
                              ceil_div(shape.out_h(), tile.ho_unroll) *
                              ceil_div(shape.out_w(), tile.wo_unroll);
  const std::uint64_t steps = static_cast<std::uint64_t>(shape.r) * shape.s *
                              ceil_div(shape.c, tile.c_unroll);
  return kIterations * steps * ceil_div(waves, tile.num_tiles);
}

void pixel_operands(const LayerData& layer, int c_unroll, int k, int oh, int ow,
                    std::vector<Fp16Value>& a, std::vector<Fp16Value>& b) {
  const LayerShape& sh = layer.shape;
  const int cpad = static_cast<int>(ceil_div(sh.c, c_unroll)) * c_unroll;
  a.assign(static_cast<std::size_t>(sh.r) * sh.s * cpad, decode_fp16(0));
  b.assign(a.size(), decode_fp16(0));
  std::size_t pos = 0;
  for (int r = 0; r < sh.r; ++r) {
    for (int s = 0; s < sh.s; ++s) {
      const int y = oh * sh.stride - sh.padding + r;
      const int x = ow * sh.stride - sh.padding + s;
      const bool inside = y >= 0 && y < sh.h && x >= 0 && x < sh.w;
      for (int c = 0; c < cpad; ++c, ++pos) {
        if (c >= sh.c) continue;
        b[pos] = decode_fp16(layer.weights[((static_cast<std::size_t>(k) * sh.c + c) * sh.r + r) * sh.s + s]);
        if (inside) a[pos] = decode_fp16(layer.ifm[(static_cast<std::size_t>(c) * sh.h + y) * sh.w + x]);
      }
    }
  }
}

SimReport simulate_layer(const LayerData& layer, const TileConfig& tile, const SimOptions& opts) {
  tile.validate();
  layer.validate();
  const LayerShape& sh = layer.shape;
  const int oh_n = sh.out_h();
  const int ow_n = sh.out_w();
  const int lanes = tile.c_unroll;
  const int ipus = tile.ipus_per_tile();
  const int clusters = tile.clusters();
  const IpuConfig ipu_cfg = tile.ipu_config();
  const int sp = ipu_cfg.safe_precision();

  std::vector<Wave> waves;
  for (int k0 = 0; k0 < sh.k; k0 += tile.k_unroll) {
    for (int oh0 = 0; oh0 < oh_n; oh0 += tile.ho_unroll) {
      for (int ow0 = 0; ow0 < ow_n; ow0 += tile.wo_unroll) waves.push_back({k0, oh0, ow0});
    }
  }
  const int c_blocks = static_cast<int>(ceil_div(sh.c, lanes));

  SimReport rep;
  rep.cycles_per_cluster.assign(clusters, 0);
  if (opts.compute_outputs) rep.outputs.assign(static_cast<std::size_t>(sh.k) * oh_n * ow_n, 0);
  std::vector<TileTrace> traces(tile.num_tiles);

  std::vector<Fp16Value> a(lanes), b(lanes);
  std::vector<int> prod(lanes), diffs(lanes);
  std::vector<int> ipu_cycles(ipus);
  std::vector<std::unique_ptr<FpIpu>> accs(ipus);
  double cluster_cycle_sum = 0;
  std::uint64_t cluster_steps = 0;

  for (std::size_t wi = 0; wi < waves.size(); ++wi) {
    const Wave& wave = waves[wi];
    TileTrace& trace = traces[wi % tile.num_tiles];
    // IPU index = (k_local * ho_unroll + oh_local) * wo_unroll + ow_local.
    auto pixel = [&](int ipu, int& k, int& oh, int& ow) {
      ow = wave.ow0 + ipu % tile.wo_unroll;
      oh = wave.oh0 + (ipu / tile.wo_unroll) % tile.ho_unroll;
      k = wave.k0 + ipu / (tile.wo_unroll * tile.ho_unroll);
      return k < sh.k && oh < oh_n && ow < ow_n;
    };
    if (opts.compute_outputs) {
      for (auto& acc : accs) acc = std::make_unique<FpIpu>(ipu_cfg, Datapath::kMultiCycle, tile.charge_empty_partitions);
    }
    for (int r = 0; r < sh.r; ++r) {
      for (int s = 0; s < sh.s; ++s) {
        for (int cb = 0; cb < c_blocks; ++cb) {
          for (int ipu = 0; ipu < ipus; ++ipu) {
            int k, oh, ow;
            if (!pixel(ipu, k, oh, ow)) {
              ipu_cycles[ipu] = 1;
              continue;
            }
            const int y = oh * sh.stride - sh.padding + r;
            const int x = ow * sh.stride - sh.padding + s;
            const bool inside = y >= 0 && y < sh.h && x >= 0 && x < sh.w;
            LaneMask zeros = 0;
            for (int l = 0; l < lanes; ++l) {
              const int c = cb * lanes + l;
              if (c < sh.c) {
                ++rep.multiply_count;
                b[l] = decode_fp16(layer.weights[((static_cast<std::size_t>(k) * sh.c + c) * sh.r + r) * sh.s + s]);
                a[l] = decode_fp16(inside ? layer.ifm[(static_cast<std::size_t>(c) * sh.h + y) * sh.w + x] : 0);
              } else {
                a[l] = b[l] = decode_fp16(0);
              }
              if (!a[l].finite() || !b[l].finite()) throw NumericError("inf/nan in layer '" + layer.name + "'");
              if (a[l].is_zero() || b[l].is_zero()) zeros |= lane_bit(l);
              prod[l] = a[l].exp + b[l].exp;
            }
            if (zeros == all_lanes(lanes)) {
              ipu_cycles[ipu] = 1;
            } else {
              const AlignmentDiffs ad = alignment_diffs(prod, zeros);
              for (int l = 0; l < lanes; ++l) {
                if (!lane_set(zeros, l)) ++rep.exp_diff_histogram[ad.diffs[l]];
              }
              const LaneMask mask = mask_beyond_precision(ad.diffs, tile.sw_precision) | zeros;
              ipu_cycles[ipu] =
                  std::max(1, count_cycles(ad.diffs, mask, sp, tile.charge_empty_partitions));
            }
            if (opts.compute_outputs) accs[ipu]->add(a, b);
          }
          for (int c = 0; c < clusters; ++c) {
            const auto first = ipu_cycles.begin() + c * tile.cluster_size;
            const int worst = *std::max_element(first, first + tile.cluster_size);
            trace.cost.push_back(kIterations * worst);
            cluster_cycle_sum += worst;
            ++cluster_steps;
          }
          ++trace.steps;
        }
      }
    }
    if (opts.compute_outputs) {
      for (int ipu = 0; ipu < ipus; ++ipu) {
        int k, oh, ow;
        if (!pixel(ipu, k, oh, ow)) continue;
        rep.outputs[(static_cast<std::size_t>(k) * oh_n + oh) * ow_n + ow] =
            accs[ipu]->result(tile.acc_format);
      }
    }
  }

  for (const TileTrace& t : traces) {
    rep.total_cycles = std::max(rep.total_cycles, run_queues(t, clusters, tile.buffer_depth, rep.cycles_per_cluster));
    rep.steps += t.steps;
  }
  rep.baseline_cycles = baseline_cycles(sh, tile);
  rep.stall_cycles = rep.total_cycles - rep.baseline_cycles;
  rep.mean_cycles_per_iteration = cluster_steps == 0 ? 0.0 : cluster_cycle_sum / static_cast<double>(cluster_steps);
  return rep;
}

DiffHistogram exp_diff_histogram(const LayerData& layer, const TileConfig& tile) {
  return simulate_layer(layer, tile, SimOptions{.compute_outputs = false}).exp_diff_histogram;
}

DesignPoint design_point(const LayerData& layer, const TileConfig& tile, const SimReport& r) {
  DesignPoint p;
  p.layer = layer.name;
  p.w = tile.precision;
  p.cluster_size = tile.cluster_size;
  p.buffer_depth = tile.buffer_depth;
  p.total_cycles = r.total_cycles;
  p.baseline_cycles = r.baseline_cycles;
  p.normalized_time = r.normalized_time();
  p.pct_diffs_gt8 = 100.0 * fraction_above(r.exp_diff_histogram, 8);
  return p;
}

std::string sim_csv_row(const DesignPoint& p) {
  char buf[128];
  std::snprintf(buf, sizeof buf, ",%d,%d,%d,%llu,%llu,%.9g,%.9g", p.w, p.cluster_size,
                p.buffer_depth, static_cast<unsigned long long>(p.total_cycles),
                static_cast<unsigned long long>(p.baseline_cycles), p.normalized_time,
                p.pct_diffs_gt8);
  return p.layer + buf;
}

std::vector<DesignPoint> sweep_design_space(const std::vector<LayerData>& layers,
                                            const std::vector<int>& precisions,
                                            const std::vector<int>& cluster_sizes,
                                            const TileConfig& base, int threads) {
  const std::size_t per_layer = precisions.size() * cluster_sizes.size();
  std::vector<DesignPoint> out(layers.size() * per_layer);
  parallel_for(out.size(), threads, [&](std::size_t idx) {
    const LayerData& layer = layers[idx / per_layer];
    TileConfig t = base;
    t.precision = precisions[(idx % per_layer) / cluster_sizes.size()];
    t.cluster_size = cluster_sizes[idx % cluster_sizes.size()];
    const SimReport r = simulate_layer(layer, t, SimOptions{.compute_outputs = false});
    out[idx] = design_point(layer, t, r);
  });
  return out;
}

}  // namespace mpipu
