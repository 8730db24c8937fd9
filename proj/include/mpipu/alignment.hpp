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

// Exponent handling unit (EHU): product exponents, maximum, per-lane
// alignment differences, software-precision masking and the multi-cycle
// partition schedule of an MC-IPU.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mpipu {

// One bit per lane; lane k is bit k. IPUs have at most 32 lanes.
using LaneMask = std::uint64_t;

inline constexpr int kMaxLanes = 64;
inline constexpr int kMaxAlignment = 58;  // product exponents span [-28, 30]

inline bool lane_set(LaneMask m, int lane) { return (m >> lane) & 1u; }
inline LaneMask lane_bit(int lane) { return LaneMask{1} << lane; }
inline LaneMask all_lanes(int n) { return n >= 64 ? ~LaneMask{0} : (LaneMask{1} << n) - 1; }

std::vector<int> product_exponents(std::span<const int> a_exps, std::span<const int> b_exps);

struct AlignmentDiffs {
  int max_exp = 0;
  std::vector<int> diffs;
};

// Maximum over the lanes not in `ignore`; ignored lanes get diff 0. Throws
// std::invalid_argument when no lane takes part.
AlignmentDiffs alignment_diffs(std::span<const int> prod_exps, LaneMask ignore = 0);

// Lane is masked iff diff >= sw_precision.
LaneMask mask_beyond_precision(std::span<const int> diffs, int sw_precision);

struct AlignmentCycle {
  int partition = 0;            // k: served diffs lie in [k*sp, (k+1)*sp)
  LaneMask served = 0;
  std::vector<int> local_shifts;  // per lane; diff - k*sp for served lanes, 0 otherwise
  int extra_shift = 0;          // k*sp, applied after the adder tree
};

struct AlignmentSchedule {
  int max_exp = 0;
  int sp = 0;
  std::vector<int> diffs;
  LaneMask masked = 0;  // lanes that take no part (sw precision, zero operands)
  std::vector<AlignmentCycle> cycles;

  int cycle_count() const { return static_cast<int>(cycles.size()); }
  // The datapath spends at least one cycle per nibble iteration even when
  // every lane is masked.
  int issue_cycles() const { return cycles.empty() ? 1 : cycle_count(); }
  LaneMask active() const { return all_lanes(static_cast<int>(diffs.size())) & ~masked; }
};

// Partitions the unmasked lanes by k = floor(diff / sp). Non-empty partitions
// are emitted in increasing k; with charge_empty_partitions every k from 0 up
// to the last occupied one costs a cycle. Throws std::invalid_argument when
// sp < 1.
AlignmentSchedule schedule_cycles(std::span<const int> diffs, LaneMask mask, int sp,
                                  bool charge_empty_partitions = false);

// Cycle count of schedule_cycles without materialising the schedule.
int count_cycles(std::span<const int> diffs, LaneMask mask, int sp,
                 bool charge_empty_partitions = false);

struct EhuOptions {
  int sw_precision = 16;
  int sp = 7;
  bool charge_empty_partitions = false;
};

// Full EHU pass for one FP inner product: zero operands are excluded from the
// maximum and masked together with lanes at or beyond the software precision.
// All-zero inputs produce a schedule with max_exp 0, every lane masked and no
// cycles.
AlignmentSchedule run_ehu(std::span<const int> a_exps, std::span<const int> b_exps,
                          LaneMask zero_lanes, const EhuOptions& opts);

}  // namespace mpipu
