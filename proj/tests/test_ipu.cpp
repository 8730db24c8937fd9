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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mpipu/errors.hpp"
#include "mpipu/exact.hpp"
#include "mpipu/ipu.hpp"
#include "oracles.hpp"

namespace mpipu {
namespace {

DecomposedOperand all_fifteen(int exp) {
  DecomposedOperand d;
  d.nibbles = {15, 15, 15};
  d.exp = exp;
  return d;
}

IpuConfig ipu(int lanes, int w, int sw = kNoMasking) {
  IpuConfig c;
  c.lanes = lanes;
  c.precision = w;
  c.sw_precision = sw;
  return c;
}

TEST(IpuConfig, DerivedWidths) {
  const IpuConfig c = ipu(16, 16);
  EXPECT_EQ(c.tree_bits(), 4);
  EXPECT_EQ(c.safe_precision(), 7);
  EXPECT_EQ(c.accumulator_width(), 33 + 4 + 15);
  EXPECT_EQ(ipu(1, 16).tree_bits(), 0);
  EXPECT_THROW(ipu(3, 16).validate(), ConfigError);
  EXPECT_THROW(ipu(16, 8).validate(), ConfigError);
  EXPECT_THROW(ipu(16, 39).validate(), ConfigError);
}

TEST(NibbleProduct, ReferenceValues) {
  EXPECT_EQ(nibble_product(15, 15), 225);
  EXPECT_EQ(nibble_product(0, 9), 0);
  EXPECT_EQ(nibble_product(-8, 7), -56);
  EXPECT_THROW(nibble_product(16, 1), NumericError);
}

TEST(LocalShiftTruncate, ReferenceValues) {
  EXPECT_EQ(local_shift_truncate(225, 0, 16), 28800);
  EXPECT_EQ(local_shift_truncate(-1, 30, 16), -1);
  EXPECT_EQ(local_shift_truncate(225, 8, 16), 112);
  EXPECT_EQ(local_shift_truncate(-225, 8, 16), -113);
  EXPECT_EQ(local_shift_truncate(5, 80, 20), 0);
  for (int w = 9; w <= 38; ++w) {
    for (int p = -120; p <= 225; p += 7) {
      for (int d = 0; d <= w - kProductBits; ++d) {
        ASSERT_EQ(local_shift_truncate(p, d, w), static_cast<std::int64_t>(p) << (w - kProductBits - d));
      }
    }
  }
}

TEST(ApproxIteration, ReferenceValues) {
  const std::vector<DecomposedOperand> a{all_fifteen(0), all_fifteen(0)};
  const std::vector<DecomposedOperand> b{all_fifteen(0), all_fifteen(-8)};
  const IpuConfig c = ipu(2, 16);
  IterationResult r = approx_nibble_iteration(a, b, 2, 2, std::vector<int>{0, 8}, 0, 0, c);
  EXPECT_EQ(r.adder_out, 28912);
  r = approx_nibble_iteration(a, b, 2, 2, std::vector<int>{0, 8}, all_lanes(2), 0, c);
  EXPECT_EQ(r.adder_out, 0);
  const std::vector<DecomposedOperand> one{all_fifteen(3)};
  r = approx_nibble_iteration(one, one, 1, 2, std::vector<int>{0}, 0, 6, ipu(1, 20));
  EXPECT_EQ(r.adder_out, 225 << 11);
}

TEST(AccumulatorShift, ReferenceValues) {
  EXPECT_EQ(int_accumulator_shift(0, 0, 2, 2), 8);
  EXPECT_EQ(fp_accumulator_shift(2, 2, 0, 0), 0);
  EXPECT_EQ(fp_accumulator_shift(2, 1, 0, 3), 7);
}

std::vector<DecomposedOperand> random_operands(std::mt19937_64& g, int n, int exp_lo, int exp_span) {
  std::vector<DecomposedOperand> v(n);
  for (auto& d : v) {
    const std::uint16_t mant = static_cast<std::uint16_t>(g() & 0x3ff);
    const int e = exp_lo + static_cast<int>(g() % exp_span);
    const std::uint16_t bits =
        static_cast<std::uint16_t>(((g() & 1) << 15) | ((e + kFp16Bias) << 10) | mant);
    d = decompose_fp16(decode_fp16(bits));
  }
  return v;
}

// Lanes whose alignment fits the window lose nothing.
TEST(ApproxIteration, ExactWhenAlignmentFitsWindow) {
  std::mt19937_64 g(21);
  for (int w : {12, 16, 28}) {
    const int sp = w - kProductBits;
    for (int it = 0; it < 3000; ++it) {
      const int n = 1 << (g() % 5);
      // Product exponents land in [2e, 2e + 2*span - 2] with 2*span - 2 < sp.
      const int span = std::max(1, (sp + 1) / 2);
      const int lo = static_cast<int>(g() % 10) - 7;
      const auto a = random_operands(g, n, lo, span);
      const auto b = random_operands(g, n, lo, span);
      std::vector<int> pe(n);
      for (int k = 0; k < n; ++k) pe[k] = a[k].exp + b[k].exp;
      const AlignmentDiffs ad = alignment_diffs(pe);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const IterationResult r = approx_nibble_iteration(a, b, i, j, ad.diffs, 0, ad.max_exp, ipu(n, w));
          ASSERT_EQ(ExactValue(BigInt(r.adder_out), r.scale_exp), exact_nibble_iteration(a, b, i, j));
        }
      }
    }
  }
}

// Floor truncation: each lane loses less than one window LSB and never adds.
TEST(ApproxIteration, PerLaneTruncationBound) {
  std::mt19937_64 g(22);
  for (int it = 0; it < 20000; ++it) {
    const int n = 1 << (g() % 6);
    const int w = 9 + static_cast<int>(g() % 30);
    const auto a = random_operands(g, n, -14, 30);
    const auto b = random_operands(g, n, -14, 30);
    std::vector<int> pe(n);
    for (int k = 0; k < n; ++k) pe[k] = a[k].exp + b[k].exp;
    const AlignmentDiffs ad = alignment_diffs(pe);
    const int i = static_cast<int>(g() % 3);
    const int j = static_cast<int>(g() % 3);
    const IterationResult r = approx_nibble_iteration(a, b, i, j, ad.diffs, 0, ad.max_exp, ipu(n, w));
    const ExactValue err = exact_nibble_iteration(a, b, i, j) - ExactValue(BigInt(r.adder_out), r.scale_exp);
    ASSERT_GE(err.sign(), 0);
    int lossy = 0;
    for (int d : ad.diffs) lossy += d > w - kProductBits;
    ASSERT_LE(err, ExactValue(BigInt(lossy), r.scale_exp));
    if (lossy == 0) {
      ASSERT_TRUE(err.is_zero());
    }
  }
}

// The full-width bound 225*(n-1)*2^(4(i+j)-22+max-w) is smaller than one
// window LSB, so a single half-LSB loss at n = 2 already exceeds it.
TEST(ApproxIteration, FullWidthBoundIsExceededByTwoLaneCase) {
  const std::vector<DecomposedOperand> a{all_fifteen(0), all_fifteen(0)};
  const std::vector<DecomposedOperand> b{all_fifteen(0), all_fifteen(-8)};
  const IterationResult r = approx_nibble_iteration(a, b, 2, 2, std::vector<int>{0, 8}, 0, 0, ipu(2, 16));
  const ExactValue err = exact_nibble_iteration(a, b, 2, 2) - ExactValue(BigInt(r.adder_out), r.scale_exp);
  EXPECT_GT(err, iteration_error_bound(2, 2, 16, 0, 2));
  EXPECT_LE(err, iteration_error_bound(2, 2, 16 - kProductBits, 0, 2));
}

TEST(IterationErrorBound, ReferenceValues) {
  EXPECT_TRUE(iteration_error_bound(2, 2, 16, 0, 1).is_zero());
  EXPECT_EQ(iteration_error_bound(2, 2, 16, 0, 2), ExactValue(BigInt(225), -22));
  EXPECT_NEAR(iteration_error_bound(2, 2, 16, 0, 2).to_double(), 5.364e-5, 1e-8);
  EXPECT_EQ(ExactValue(iteration_error_bound(2, 2, 16, 3, 9).mantissa(), iteration_error_bound(2, 2, 16, 3, 9).exp() - 16),
            iteration_error_bound(0, 0, 16, 3, 9));
}

TEST(IntMode, ReferenceValues) {
  const IpuConfig c = ipu(16, 16);
  const IntIpResult r = int_ip(std::vector<std::int64_t>{3, -2}, std::vector<std::int64_t>{4, 5}, 4, 4, c);
  EXPECT_EQ(r.value, 2);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(int_ip(std::vector<std::int64_t>{-100}, std::vector<std::int64_t>{2047}, 8, 12, c).iterations, 6);
  EXPECT_THROW(int_ip(std::vector<std::int64_t>{8}, std::vector<std::int64_t>{1}, 4, 4, c), NumericError);
}

TEST(IntMode, ExhaustiveInt4PairsOfTwo) {
  const IpuConfig c = ipu(2, 12);
  for (int a0 = -8; a0 < 8; ++a0)
    for (int a1 = -8; a1 < 8; ++a1)
      for (int b0 = -8; b0 < 8; ++b0)
        for (int b1 = -8; b1 < 8; ++b1) {
          const IntIpResult r = int_ip(std::vector<std::int64_t>{a0, a1}, std::vector<std::int64_t>{b0, b1}, 4, 4, c);
          ASSERT_EQ(r.value, a0 * b0 + a1 * b1);
          ASSERT_EQ(r.iterations, 1);
        }
}

TEST(IntMode, RandomAgainstBigIntegerSum) {
  std::mt19937_64 g(23);
  for (int it = 0; it < 10000; ++it) {
    const int wa = 4 * (1 + static_cast<int>(g() % 3));
    const int wb = 4 * (1 + static_cast<int>(g() % 3));
    const bool is_signed = g() & 1;
    const Signedness s = is_signed ? Signedness::kSigned : Signedness::kUnsigned;
    const int len = 1 + static_cast<int>(g() % 40);
    std::vector<std::int64_t> a(len), b(len);
    BigInt want = 0;
    for (int k = 0; k < len; ++k) {
      auto draw = [&](int w) {
        const std::int64_t v = static_cast<std::int64_t>(g() % (std::uint64_t{1} << w));
        return is_signed ? v - (std::int64_t{1} << (w - 1)) : v;
      };
      a[k] = draw(wa);
      b[k] = draw(wb);
      want += BigInt(a[k]) * b[k];
    }
    const IntIpResult r = int_ip(a, b, wa, wb, ipu(16, 16), s);
    ASSERT_EQ(BigInt(r.value), want);
    ASSERT_EQ(r.iterations, (wa / 4) * (wb / 4) * ((len + 15) / 16));
  }
}

TEST(FpIp, AllZeroIsPositiveZero) {
  const std::vector<Fp16Value> z(8, decode_fp16(0x8000));
  const std::vector<Fp16Value> x(8, decode_fp16(0x3c00));
  EXPECT_EQ(fp_ip_approx(z, x, ipu(8, 16), FloatFormat::kFp16).bits, 0u);
  EXPECT_EQ(fp_ip_approx(z, x, ipu(8, 16), FloatFormat::kFp32, Datapath::kMultiCycle).bits, 0u);
}

TEST(FpIp, SingleProductIsRoundedExactly) {
  std::mt19937_64 g(24);
  for (int it = 0; it < 20000; ++it) {
    const std::uint16_t ab = oracle::random_finite_fp16(g);
    const std::uint16_t bb = oracle::random_finite_fp16(g);
    const std::vector<Fp16Value> a{decode_fp16(ab)};
    const std::vector<Fp16Value> b{decode_fp16(bb)};
    const ExactValue exact = ExactValue(oracle::to_bigint(oracle::fixed_product(ab, bb)), oracle::FixedSum::kExp);
    for (FloatFormat f : {FloatFormat::kFp16, FloatFormat::kFp32}) {
      for (int w : {28, 33, 38}) {
        ASSERT_EQ(fp_ip_approx(a, b, ipu(1, w), f).bits, exact.round(f)) << ab << " " << bb;
      }
    }
  }
}

TEST(FpIp, WideWindowMatchesFp32ReferenceOnNormalData) {
  std::mt19937_64 g(25);
  std::normal_distribution<double> nd;
  int contaminated = 0;
  const int trials = 2000;
  for (int it = 0; it < trials; ++it) {
    std::vector<std::uint16_t> ab(16), bb(16);
    std::vector<Fp16Value> a(16), b(16);
    for (int k = 0; k < 16; ++k) {
      ab[k] = double_to_fp16(nd(g));
      bb[k] = double_to_fp16(nd(g));
      a[k] = decode_fp16(ab[k]);
      b[k] = decode_fp16(bb[k]);
    }
    const ExactValue exact(oracle::to_bigint(oracle::fixed_ip(ab, bb).mag), oracle::FixedSum::kExp);
    contaminated += fp_ip_approx(a, b, ipu(16, 28, 27), FloatFormat::kFp32).bits != exact.round(FloatFormat::kFp32);
  }
  EXPECT_LT(contaminated, trials / 2);
}

// With every alignment inside one partition the two datapaths coincide.
TEST(FpIp, MultiCycleEqualsTruncatingWithinOnePartition) {
  std::mt19937_64 g(26);
  for (int it = 0; it < 5000; ++it) {
    const int w = 12 + static_cast<int>(g() % 27);
    const int sp = w - kProductBits;
    const int span = std::max(1, (sp + 1) / 2);
    const int lo = static_cast<int>(g() % 12) - 8;
    std::vector<Fp16Value> a(8), b(8);
    for (int k = 0; k < 8; ++k) {
      auto draw = [&] {
        const int e = std::min(kFp16MaxExp, lo + static_cast<int>(g() % span));
        return decode_fp16(static_cast<std::uint16_t>(((g() & 1) << 15) | ((e + kFp16Bias) << 10) | (g() & 0x3ff)));
      };
      a[k] = draw();
      b[k] = draw();
    }
    const FpIpResult t = fp_ip_approx(a, b, ipu(8, w), FloatFormat::kFp32);
    const FpIpResult m = fp_ip_approx(a, b, ipu(8, w), FloatFormat::kFp32, Datapath::kMultiCycle);
    ASSERT_EQ(t.acc, m.acc);
    ASSERT_EQ(m.stats.cycles_per_iteration, 1);
  }
}

TEST(FpIp, InfAndNanAreRejected) {
  const std::vector<Fp16Value> a{decode_fp16(0x7c00)};
  const std::vector<Fp16Value> b{decode_fp16(0x3c00)};
  EXPECT_THROW(fp_ip_approx(a, b, ipu(1, 16), FloatFormat::kFp16), NumericError);
}

TEST(FpIp, LongVectorsChunkByLanes) {
  std::vector<Fp16Value> a(40, decode_fp16(0x3c00)), b(40, decode_fp16(0x4000));
  const FpIpResult r = fp_ip_approx(a, b, ipu(16, 16), FloatFormat::kFp16);
  EXPECT_EQ(r.stats.ip_ops, 3);
  EXPECT_EQ(fp16_to_double(static_cast<std::uint16_t>(r.bits)), 80.0);
}

std::vector<Fp16Value> normal_vector(std::mt19937_64& g, int n) {
  std::normal_distribution<double> nd;
  std::vector<Fp16Value> v(n);
  for (auto& x : v) x = decode_fp16(double_to_fp16(nd(g)));
  return v;
}

TEST(FpIpProperty, ErrorNonIncreasingInPrecision) {
  std::mt19937_64 g(41);
  for (int it = 0; it < 10000; ++it) {
    const auto a = normal_vector(g, 16);
    const auto b = normal_vector(g, 16);
    const ExactValue exact = exact_fp_ip(a, b);
    const FloatFormat f = (it & 1) ? FloatFormat::kFp32 : FloatFormat::kFp16;
    ExactValue prev;
    for (int w = 9; w <= 38; ++w) {
      const ExactValue err = (ExactValue::from_bits(fp_ip_approx(a, b, ipu(16, w), f).bits, f) - exact).abs();
      if (w > 9) {
        ASSERT_LE(err, prev) << "w=" << w << " trial " << it;
      }
      prev = err;
    }
  }
}

// Truncation floors, so negation is exact only while nothing is dropped.
// In general both results sit at or below their exact values, which bounds
// their sum by zero.
TEST(FpIpProperty, SignSymmetry) {
  std::mt19937_64 g(42);
  int asymmetric = 0, exact_cases = 0;
  for (int it = 0; it < 10000; ++it) {
    auto a = normal_vector(g, 16);
    const auto b = normal_vector(g, 16);
    std::vector<Fp16Value> neg = a;
    for (auto& x : neg) x.sign = -x.sign;
    const FloatFormat f = (it & 1) ? FloatFormat::kFp32 : FloatFormat::kFp16;
    const std::uint32_t sign_bit = f == FloatFormat::kFp16 ? 0x8000u : 0x80000000u;
    const int w = 9 + static_cast<int>(g() % 30);
    const std::uint32_t r = fp_ip_approx(a, b, ipu(16, w), f).bits;
    const std::uint32_t rn = fp_ip_approx(neg, b, ipu(16, w), f).bits;
    ASSERT_LE(bits_to_double(r, f) + bits_to_double(rn, f), 0.0);
    asymmetric += rn != (r ^ sign_bit) && !(r == 0 && rn == 0);

    const FpIpResult full = fp_ip_approx(a, b, ipu(16, w), f);
    const ExactValue acc_value(BigInt(full.acc.mag), full.acc.exp - kAccumulatorFracBits);
    if (acc_value == exact_fp_ip(a, b)) {
      ++exact_cases;
      ASSERT_TRUE(rn == (r ^ sign_bit) || (r == 0 && rn == 0)) << "trial " << it;
    }
  }
  EXPECT_GT(exact_cases, 100);
  EXPECT_GT(asymmetric, 0);
}

TEST(FpIpProperty, PowerOfTwoScalingIsEquivariant) {
  std::mt19937_64 g(43);
  int checked = 0;
  for (int it = 0; it < 10000; ++it) {
    const auto a = normal_vector(g, 16);
    const auto b = normal_vector(g, 16);
    const int k = static_cast<int>(g() % 5) - 2;
    auto scale = [&](std::vector<Fp16Value> v) {
      for (auto& x : v) {
        if (x.is_zero()) continue;
        if (x.cls != FpClass::kNormal || x.exp + k < kFp16MinExp || x.exp + k > kFp16MaxExp) return std::vector<Fp16Value>{};
        x.exp += k;
      }
      return v;
    };
    const auto as = scale(a);
    const auto bs = scale(b);
    if (as.empty() || bs.empty()) continue;
    const FloatFormat f = (it & 1) ? FloatFormat::kFp32 : FloatFormat::kFp16;
    const int w = 9 + static_cast<int>(g() % 30);
    const std::uint32_t r = fp_ip_approx(a, b, ipu(16, w), f).bits;
    const std::uint32_t rs = fp_ip_approx(as, bs, ipu(16, w), f).bits;
    const double v = bits_to_double(r, f);
    const double vs = bits_to_double(rs, f);
    // The property needs both results in the normal range of the format.
    const double tiny = f == FloatFormat::kFp16 ? 0x1p-14 : 0x1p-126;
    if (std::abs(v) < 4 * tiny || std::abs(vs) < 4 * tiny || std::isinf(v) || std::isinf(vs)) continue;
    ++checked;
    ASSERT_EQ(vs, std::ldexp(v, 2 * k));
    const ExactValue err = (ExactValue::from_bits(r, f) - exact_fp_ip(a, b)).abs();
    const ExactValue err_s = (ExactValue::from_bits(rs, f) - exact_fp_ip(as, bs)).abs();
    ASSERT_EQ(err_s, err * ExactValue::pow2(2 * k));
  }
  EXPECT_GT(checked, 9000);
}

}  // namespace
}  // namespace mpipu
