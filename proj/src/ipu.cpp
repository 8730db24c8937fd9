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

#include "mpipu/ipu.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <stdexcept>
#include <string>

#include "mpipu/errors.hpp"

namespace mpipu {
namespace {

// Arithmetic shift: left for s < 0, floor division by 2^s otherwise.
int128 floor_shift(int128 v, int s) {
  if (s <= 0) return v << -s;
  if (s >= 127) return v < 0 ? -1 : 0;
  return v >> s;
}

void check_register(int128 mag, const IpuConfig& cfg) {
  const int128 limit = int128{1} << (cfg.accumulator_width() - 1);
  if (mag >= limit || mag < -limit) {
    throw NumericError("accumulator overflow: value exceeds " +
                       std::to_string(cfg.accumulator_width()) + "-bit register");
  }
}

// Adder-tree input: the 33-bit field the w-bit result is aligned to.
int128 align_to_field(std::int64_t adder_out, int w) {
  return floor_shift(adder_out, w - kAccumulatorTopBits);
}

void check_adder(std::int64_t adder_out, const IpuConfig& cfg) {
  const int128 limit = int128{1} << (cfg.precision + cfg.tree_bits());
  if (adder_out >= limit || adder_out <= -limit) {
    throw NumericError("adder tree output exceeds w + t bits");
  }
}

}  // namespace

int IpuConfig::tree_bits() const {
  return lanes <= 1 ? 0 : std::bit_width(static_cast<unsigned>(lanes - 1));
}

void IpuConfig::validate() const {
  if (lanes < 1 || lanes > 32 || !std::has_single_bit(static_cast<unsigned>(lanes))) {
    throw ConfigError("lanes must be a power of two in [1, 32], got " + std::to_string(lanes));
  }
  if (precision < kProductBits || precision > 38) {
    throw ConfigError("IPU precision must be in [9, 38], got " + std::to_string(precision));
  }
  if (sw_precision < 1 || sw_precision > kNoMasking) {
    throw ConfigError("software precision must be in [1, 59], got " +
                      std::to_string(sw_precision));
  }
  if (depth_bits < 0 || depth_bits > 24) {
    throw ConfigError("depth bits must be in [0, 24], got " + std::to_string(depth_bits));
  }
}

int nibble_product(int a_nib, int b_nib) {
  if (a_nib < -16 || a_nib > 15 || b_nib < -16 || b_nib > 15) {
    throw NumericError("nibble operand outside 5-bit signed range");
  }
  return a_nib * b_nib;
}

std::int64_t local_shift_truncate(int p, int diff, int w) {
  if (diff < 0) throw std::invalid_argument("negative alignment shift");
  const std::int64_t placed = static_cast<std::int64_t>(p) << (w - kProductBits);
  if (diff >= 63) return placed < 0 ? -1 : 0;
  return placed >> diff;
}

int window_scale_exp(int max_exp, int i, int j, int w) {
  return max_exp + 4 * (i + j) - 22 - (w - kProductBits);
}

IterationResult approx_nibble_iteration(std::span<const DecomposedOperand> a,
                                        std::span<const DecomposedOperand> b, int i, int j,
                                        std::span<const int> diffs, LaneMask mask, int max_exp,
                                        const IpuConfig& cfg) {
  IterationResult r;
  r.max_exp = max_exp;
  r.scale_exp = window_scale_exp(max_exp, i, j, cfg.precision);
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (lane_set(mask, static_cast<int>(k))) continue;
    const int p = a[k].sign * b[k].sign * a[k].nibbles[i] * b[k].nibbles[j];
    r.adder_out += local_shift_truncate(p, diffs[k], cfg.precision);
    r.served |= lane_bit(static_cast<int>(k));
  }
  check_adder(r.adder_out, cfg);
  return r;
}

IterationResult mc_nibble_iteration(std::span<const DecomposedOperand> a,
                                    std::span<const DecomposedOperand> b, int i, int j,
                                    const AlignmentCycle& cycle, int max_exp,
                                    const IpuConfig& cfg) {
  IterationResult r;
  r.max_exp = max_exp;
  r.extra_shift = cycle.extra_shift;
  r.scale_exp = window_scale_exp(max_exp, i, j, cfg.precision) - cycle.extra_shift;
  r.served = cycle.served;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!lane_set(cycle.served, static_cast<int>(k))) continue;
    const int p = a[k].sign * b[k].sign * a[k].nibbles[i] * b[k].nibbles[j];
    r.adder_out += local_shift_truncate(p, cycle.local_shifts[k], cfg.precision);
  }
  check_adder(r.adder_out, cfg);
  return r;
}

AccumulatorState accumulate_int(AccumulatorState acc, const IterationResult& r, int i, int j,
                                int ka, int kb, const IpuConfig& cfg) {
  const int shift = int_accumulator_shift(i, j, ka, kb);
  const int128 sum = int128{acc.mag} + floor_shift(align_to_field(r.adder_out, cfg.precision), shift);
  check_register(sum, cfg);
  return {0, static_cast<std::int64_t>(sum)};
}

AccumulatorState accumulate_fp(AccumulatorState acc, const IterationResult& r, int i, int j,
                               const IpuConfig& cfg) {
  const int nibble_shift = fp_accumulator_shift(i, j, r.extra_shift, 0);
  const int128 incoming = align_to_field(r.adder_out, cfg.precision);
  int128 sum;
  if (r.max_exp > acc.exp) {
    // Swap: the register takes the right shift instead of a left shift of
    // the incoming value.
    const long delta = static_cast<long>(r.max_exp) - acc.exp;
    const int old_shift = delta > 127 ? 127 : static_cast<int>(delta);
    sum = floor_shift(acc.mag, old_shift) + floor_shift(incoming, nibble_shift);
    acc.exp = r.max_exp;
  } else {
    sum = int128{acc.mag} + floor_shift(incoming, nibble_shift + (acc.exp - r.max_exp));
  }
  check_register(sum, cfg);
  acc.mag = static_cast<std::int64_t>(sum);
  return acc;
}

std::uint32_t round_accumulator(const AccumulatorState& acc, FloatFormat fmt) {
  if (acc.mag == 0) return 0;
  const bool negative = acc.mag < 0;
  const uint128 mag = negative ? uint128(-int128{acc.mag}) : uint128(acc.mag);
  return round_scaled(negative, mag, acc.exp - kAccumulatorFracBits, false, fmt);
}

IntIpResult int_ip(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                   int a_width, int b_width, const IpuConfig& cfg, Signedness signedness) {
  cfg.validate();
  if (a.size() != b.size()) throw std::invalid_argument("operand vectors differ in length");
  const int ka = a_width / 4;
  const int kb = b_width / 4;
  IntIpResult out;
  std::vector<std::vector<int>> an;
  std::vector<std::vector<int>> bn;
  for (std::size_t start = 0; start < a.size(); start += cfg.lanes) {
    const std::size_t len = std::min<std::size_t>(cfg.lanes, a.size() - start);
    an.clear();
    bn.clear();
    for (std::size_t k = 0; k < len; ++k) {
      an.push_back(decompose_int(a[start + k], a_width, signedness));
      bn.push_back(decompose_int(b[start + k], b_width, signedness));
    }
    for (int i = ka - 1; i >= 0; --i) {
      for (int j = kb - 1; j >= 0; --j) {
        IterationResult r;
        for (std::size_t k = 0; k < len; ++k) {
          // Local shift is always 0 in INT mode.
          r.adder_out += local_shift_truncate(nibble_product(an[k][i], bn[k][j]), 0, cfg.precision);
        }
        check_adder(r.adder_out, cfg);
        out.acc = accumulate_int(out.acc, r, i, j, ka, kb, cfg);
        ++out.iterations;
      }
    }
  }
  // Register LSB sits 24 - 4(ka+kb-2) bits below the integer units.
  const int frac = kAccumulatorTopBits - kProductBits - 4 * (ka + kb - 2);
  out.value = out.acc.mag >> frac;
  if ((out.value << frac) != out.acc.mag) throw NumericError("INT accumulation lost bits");
  return out;
}

FpIpu::FpIpu(const IpuConfig& cfg, Datapath datapath, bool charge_empty_partitions)
    : cfg_(cfg), datapath_(datapath), charge_empty_(charge_empty_partitions) {
  cfg_.validate();
  if (datapath_ == Datapath::kMultiCycle && cfg_.safe_precision() < 1) {
    throw ConfigError("MC-IPU needs precision >= 10");
  }
}

FpIpStats FpIpu::add(std::span<const Fp16Value> a, std::span<const Fp16Value> b) {
  if (a.size() != b.size()) throw std::invalid_argument("operand vectors differ in length");
  const int n = static_cast<int>(a.size());
  if (n > cfg_.lanes) throw std::invalid_argument("more operands than IPU lanes");

  std::array<DecomposedOperand, kMaxLanes> da;
  std::array<DecomposedOperand, kMaxLanes> db;
  std::array<int, kMaxLanes> prod{};
  LaneMask zeros = 0;
  for (int k = 0; k < n; ++k) {
    da[k] = decompose_fp16(a[k]);
    db[k] = decompose_fp16(b[k]);
    prod[k] = a[k].exp + b[k].exp;
    if (a[k].is_zero() || b[k].is_zero()) zeros |= lane_bit(k);
  }

  FpIpStats stats;
  stats.ip_ops = 1;
  stats.zero_lanes = std::popcount(zeros);
  if (zeros == all_lanes(n)) return stats;

  const std::span<const int> prod_span(prod.data(), n);
  const AlignmentDiffs ad = alignment_diffs(prod_span, zeros);
  for (int k = 0; k < n; ++k) {
    if (!lane_set(zeros, k)) stats.max_alignment = std::max(stats.max_alignment, ad.diffs[k]);
  }
  const LaneMask sw_mask = mask_beyond_precision(ad.diffs, cfg_.sw_precision) & ~zeros;
  stats.masked_lanes = std::popcount(sw_mask);
  const LaneMask mask = sw_mask | zeros;

  const std::span<const DecomposedOperand> sa(da.data(), n);
  const std::span<const DecomposedOperand> sb(db.data(), n);
  if (datapath_ == Datapath::kTruncating) {
    for (int i = kFpNibbles - 1; i >= 0; --i) {
      for (int j = kFpNibbles - 1; j >= 0; --j) {
        const IterationResult r = approx_nibble_iteration(sa, sb, i, j, ad.diffs, mask, ad.max_exp, cfg_);
        acc_ = accumulate_fp(acc_, r, i, j, cfg_);
      }
    }
    return stats;
  }

  const AlignmentSchedule sched =
      schedule_cycles(ad.diffs, mask, cfg_.safe_precision(), charge_empty_);
  stats.cycles_per_iteration = sched.issue_cycles();
  for (int i = kFpNibbles - 1; i >= 0; --i) {
    for (int j = kFpNibbles - 1; j >= 0; --j) {
      for (const AlignmentCycle& c : sched.cycles) {
        if (c.served == 0) continue;  // charged but idle
        const IterationResult r = mc_nibble_iteration(sa, sb, i, j, c, ad.max_exp, cfg_);
        acc_ = accumulate_fp(acc_, r, i, j, cfg_);
      }
    }
  }
  return stats;
}

FpIpResult fp_ip_approx(std::span<const Fp16Value> a, std::span<const Fp16Value> b,
                        const IpuConfig& cfg, FloatFormat fmt, Datapath datapath) {
  if (a.size() != b.size()) throw std::invalid_argument("operand vectors differ in length");
  FpIpu ipu(cfg, datapath);
  FpIpResult out;
  out.format = fmt;
  for (std::size_t start = 0; start < a.size(); start += cfg.lanes) {
    const std::size_t len = std::min<std::size_t>(cfg.lanes, a.size() - start);
    const FpIpStats s = ipu.add(a.subspan(start, len), b.subspan(start, len));
    out.stats.max_alignment = std::max(out.stats.max_alignment, s.max_alignment);
    out.stats.masked_lanes += s.masked_lanes;
    out.stats.zero_lanes += s.zero_lanes;
    out.stats.cycles_per_iteration = std::max(out.stats.cycles_per_iteration, s.cycles_per_iteration);
    out.stats.ip_ops += s.ip_ops;
  }
  out.acc = ipu.state();
  out.bits = ipu.result(fmt);
  return out;
}

}  // namespace mpipu
