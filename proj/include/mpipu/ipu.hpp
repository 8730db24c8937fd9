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

// Value-level golden model of an n-input mixed-precision inner product unit
// IPU(w): 5b x 5b signed multipliers, local right shifters that truncate to a
// w-bit window, a w-bit adder tree and the non-normalized accumulator.
//
// Scaling conventions used throughout:
//  * A product of nibble i of `a` and nibble j of `b` is worth
//    p * 2^(prod_exp + 4(i+j) - 22), prod_exp = a.exp + b.exp.
//  * The local shifter places p at the top of the w-bit window, so a window
//    value v is worth v * 2^(max_exp + 4(i+j) - 22 - (w-9)).
//  * The accumulator register holds 30 fraction bits below its exponent:
//    a register value m is worth m * 2^(exp - 30).

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mpipu/alignment.hpp"
#include "mpipu/fp_codec.hpp"

namespace mpipu {

inline constexpr int kProductBits = 9;         // signed 5b x 5b product
inline constexpr int kAccumulatorTopBits = 33;  // field the adder output is aligned to
inline constexpr int kAccumulatorFracBits = 30;
inline constexpr int kFpNibbles = 3;
inline constexpr int kNoMasking = kMaxAlignment + 1;

struct IpuConfig {
  int lanes = 16;         // n, power of two in [1, 32]
  int precision = 16;     // w, adder tree width in [9, 38]
  int sw_precision = 16;  // lanes with alignment >= this are masked
  int depth_bits = 15;    // l = ceil(log2 d)

  int tree_bits() const;  // t = ceil(log2 n)
  int safe_precision() const { return precision - kProductBits; }
  int accumulator_width() const { return kAccumulatorTopBits + tree_bits() + depth_bits; }
  void validate() const;  // throws ConfigError
};

// Exact signed product of two 5-bit signed nibbles.
int nibble_product(int a_nib, int b_nib);

// floor(p * 2^(w-9) / 2^diff): the product placed in a w-bit window and
// arithmetically shifted right. Exact while diff <= w - 9.
std::int64_t local_shift_truncate(int p, int diff, int w);

struct IterationResult {
  std::int64_t adder_out = 0;
  int max_exp = 0;
  int extra_shift = 0;  // shared shift applied after the adder tree (MC-IPU)
  int scale_exp = 0;    // adder_out * 2^scale_exp is the iteration's value
  LaneMask served = 0;
};

// Scale of a window value for nibble pair (i, j).
int window_scale_exp(int max_exp, int i, int j, int w);

// Single-cycle approximate nibble iteration over all unmasked lanes, each
// shifted locally by its full alignment difference.
IterationResult approx_nibble_iteration(std::span<const DecomposedOperand> a,
                                        std::span<const DecomposedOperand> b, int i, int j,
                                        std::span<const int> diffs, LaneMask mask, int max_exp,
                                        const IpuConfig& cfg);

// One MC-IPU cycle: only the lanes served by `cycle` enter the adder tree,
// shifted locally by less than the safe precision.
IterationResult mc_nibble_iteration(std::span<const DecomposedOperand> a,
                                    std::span<const DecomposedOperand> b, int i, int j,
                                    const AlignmentCycle& cycle, int max_exp,
                                    const IpuConfig& cfg);

inline constexpr int kEmptyAccumulatorExp = -(1 << 20);

struct AccumulatorState {
  int exp = kEmptyAccumulatorExp;
  std::int64_t mag = 0;

  static AccumulatorState for_int() { return {0, 0}; }
  bool operator==(const AccumulatorState&) const = default;
};

// INT mode: shift by 4((ka-i-1)+(kb-j-1)) and add; exp stays 0.
// Right shift applied to the field-aligned adder output before it is added
// to the register. exp_gap = acc.exp - max_exp when no swap happens.
inline int fp_accumulator_shift(int i, int j, int extra_shift, int exp_gap) {
  return 4 * ((kFpNibbles - i - 1) + (kFpNibbles - j - 1)) + extra_shift + exp_gap;
}
inline int int_accumulator_shift(int i, int j, int ka, int kb) {
  return 4 * ((ka - i - 1) + (kb - j - 1));
}

AccumulatorState accumulate_int(AccumulatorState acc, const IterationResult& r, int i, int j,
                                int ka, int kb, const IpuConfig& cfg);

// FP mode: the incoming value is shifted by 4((2-i)+(2-j)) + extra_shift and
// by |max_exp - exp| when max_exp <= exp. When max_exp > exp the register is
// swapped: the old value is shifted by max_exp - exp and exp := max_exp.
// Bits below the register LSB are discarded. Throws NumericError on overflow.
AccumulatorState accumulate_fp(AccumulatorState acc, const IterationResult& r, int i, int j,
                               const IpuConfig& cfg);

// Normalizes and rounds (round-to-nearest-even) the register to fmt.
std::uint32_t round_accumulator(const AccumulatorState& acc, FloatFormat fmt);

struct IntIpResult {
  std::int64_t value = 0;
  int iterations = 0;
  AccumulatorState acc = AccumulatorState::for_int();
};

// Integer inner product through nibble iterations. Vectors longer than the
// lane count are processed as consecutive IP operations into one accumulator.
IntIpResult int_ip(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                   int a_width, int b_width, const IpuConfig& cfg,
                   Signedness signedness = Signedness::kSigned);

enum class Datapath : std::uint8_t {
  kTruncating,  // IPU(w): every lane aligned in one cycle, truncated to w bits
  kMultiCycle,  // MC-IPU(w): partitions of width w-9 served over several cycles
};

struct FpIpStats {
  int max_alignment = 0;  // largest diff among non-zero lanes
  int masked_lanes = 0;   // lanes masked by the software precision
  int zero_lanes = 0;
  int cycles_per_iteration = 1;
  int ip_ops = 0;
};

// One FP16 inner product unit with its accumulator. Each add() is one FP-IP
// operation of at most `lanes` pairs: one EHU pass, then nine nibble
// iterations from the most significant pair (2,2) down to (0,0).
class FpIpu {
 public:
  FpIpu(const IpuConfig& cfg, Datapath datapath, bool charge_empty_partitions = false);

  FpIpStats add(std::span<const Fp16Value> a, std::span<const Fp16Value> b);

  const AccumulatorState& state() const { return acc_; }
  std::uint32_t result(FloatFormat fmt) const { return round_accumulator(acc_, fmt); }
  const IpuConfig& config() const { return cfg_; }

 private:
  IpuConfig cfg_;
  Datapath datapath_;
  bool charge_empty_;
  AccumulatorState acc_;
};

struct FpIpResult {
  std::uint32_t bits = 0;
  FloatFormat format = FloatFormat::kFp16;
  FpIpStats stats;
  AccumulatorState acc;
};

// Approximate FP16 inner product rounded to fmt. Vectors longer than the lane
// count are split into consecutive FP-IP operations on one accumulator.
// Throws NumericError on inf/nan inputs.
FpIpResult fp_ip_approx(std::span<const Fp16Value> a, std::span<const Fp16Value> b,
                        const IpuConfig& cfg, FloatFormat fmt,
                        Datapath datapath = Datapath::kTruncating);

}  // namespace mpipu
