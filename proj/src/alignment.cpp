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

#include "mpipu/alignment.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <stdexcept>
#include <string>

namespace mpipu {

std::vector<int> product_exponents(std::span<const int> a_exps, std::span<const int> b_exps) {
  if (a_exps.size() != b_exps.size()) {
    throw std::invalid_argument("exponent vectors differ in length");
  }
  std::vector<int> out(a_exps.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a_exps[k] + b_exps[k];
  return out;
}

AlignmentDiffs alignment_diffs(std::span<const int> prod_exps, LaneMask ignore) {
  AlignmentDiffs r;
  r.max_exp = std::numeric_limits<int>::min();
  for (std::size_t k = 0; k < prod_exps.size(); ++k) {
    if (!lane_set(ignore, static_cast<int>(k))) r.max_exp = std::max(r.max_exp, prod_exps[k]);
  }
  if (r.max_exp == std::numeric_limits<int>::min()) {
    throw std::invalid_argument("alignment needs at least one participating lane");
  }
  r.diffs.resize(prod_exps.size());
  for (std::size_t k = 0; k < prod_exps.size(); ++k) {
    r.diffs[k] = lane_set(ignore, static_cast<int>(k)) ? 0 : r.max_exp - prod_exps[k];
  }
  return r;
}

LaneMask mask_beyond_precision(std::span<const int> diffs, int sw_precision) {
  LaneMask m = 0;
  for (std::size_t k = 0; k < diffs.size(); ++k) {
    if (diffs[k] >= sw_precision) m |= lane_bit(static_cast<int>(k));
  }
  return m;
}

namespace {

// Bit k set when partition k holds at least one active lane.
std::uint64_t occupied_partitions(std::span<const int> diffs, LaneMask mask, int sp) {
  if (sp < 1) throw std::invalid_argument("safe precision must be >= 1, got " + std::to_string(sp));
  std::uint64_t parts = 0;
  for (std::size_t k = 0; k < diffs.size(); ++k) {
    if (lane_set(mask, static_cast<int>(k))) continue;
    parts |= std::uint64_t{1} << (diffs[k] / sp);
  }
  return parts;
}

}  // namespace

int count_cycles(std::span<const int> diffs, LaneMask mask, int sp, bool charge_empty_partitions) {
  const std::uint64_t parts = occupied_partitions(diffs, mask, sp);
  if (parts == 0) return 0;
  if (charge_empty_partitions) return 64 - std::countl_zero(parts);
  return std::popcount(parts);
}

AlignmentSchedule schedule_cycles(std::span<const int> diffs, LaneMask mask, int sp,
                                  bool charge_empty_partitions) {
  const std::uint64_t parts = occupied_partitions(diffs, mask, sp);
  AlignmentSchedule s;
  s.sp = sp;
  s.diffs.assign(diffs.begin(), diffs.end());
  s.masked = mask & all_lanes(static_cast<int>(diffs.size()));
  const int last = parts == 0 ? -1 : 63 - std::countl_zero(parts);
  for (int k = 0; k <= last; ++k) {
    const bool occupied = (parts >> k) & 1u;
    if (!occupied && !charge_empty_partitions) continue;
    AlignmentCycle c;
    c.partition = k;
    c.extra_shift = k * sp;
    c.local_shifts.assign(diffs.size(), 0);
    for (std::size_t lane = 0; lane < diffs.size(); ++lane) {
      if (lane_set(mask, static_cast<int>(lane)) || diffs[lane] / sp != k) continue;
      c.served |= lane_bit(static_cast<int>(lane));
      c.local_shifts[lane] = diffs[lane] - k * sp;
    }
    s.cycles.push_back(std::move(c));
  }
  return s;
}

AlignmentSchedule run_ehu(std::span<const int> a_exps, std::span<const int> b_exps,
                          LaneMask zero_lanes, const EhuOptions& opts) {
  const std::vector<int> prod = product_exponents(a_exps, b_exps);
  const int n = static_cast<int>(prod.size());
  if (n > kMaxLanes) throw std::invalid_argument("too many lanes");
  zero_lanes &= all_lanes(n);
  if (zero_lanes == all_lanes(n)) {
    AlignmentSchedule s;
    s.sp = opts.sp;
    s.diffs.assign(prod.size(), 0);
    s.masked = zero_lanes;
    return s;
  }
  AlignmentDiffs d = alignment_diffs(prod, zero_lanes);
  const LaneMask mask = zero_lanes | mask_beyond_precision(d.diffs, opts.sw_precision);
  AlignmentSchedule s = schedule_cycles(d.diffs, mask, opts.sp, opts.charge_empty_partitions);
  s.max_exp = d.max_exp;
  return s;
}

}  // namespace mpipu
