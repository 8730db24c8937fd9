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

#include "mpipu/fp_codec.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "mpipu/errors.hpp"

namespace mpipu {
namespace {

struct FormatTraits {
  int exp_bits;
  int man_bits;
  int bias;
};

constexpr FormatTraits traits(FloatFormat fmt) {
  return fmt == FloatFormat::kFp16 ? FormatTraits{5, 10, 15}
                                   : FormatTraits{8, 23, 127};
}

}  // namespace

std::string_view to_string(FpClass c) {
  switch (c) {
    case FpClass::kZero: return "zero";
    case FpClass::kSubnormal: return "subnormal";
    case FpClass::kNormal: return "normal";
    case FpClass::kInf: return "inf";
    case FpClass::kNaN: return "nan";
  }
  return "?";
}

std::string_view to_string(FloatFormat f) {
  return f == FloatFormat::kFp16 ? "fp16" : "fp32";
}

FloatFormat parse_float_format(std::string_view name) {
  if (name == "fp16") return FloatFormat::kFp16;
  if (name == "fp32") return FloatFormat::kFp32;
  throw ConfigError("unknown float format '" + std::string(name) + "'");
}

int bit_length(uint128 v) {
  const auto hi = static_cast<std::uint64_t>(v >> 64);
  if (hi != 0) return 128 - std::countl_zero(hi);
  return 64 - std::countl_zero(static_cast<std::uint64_t>(v));
}

Fp16Value decode_fp16(std::uint16_t bits) {
  Fp16Value v;
  v.sign = (bits & 0x8000u) ? -1 : 1;
  const int field = (bits >> 10) & 0x1f;
  const int man = bits & 0x3ff;
  if (field == 0x1f) {
    v.cls = man == 0 ? FpClass::kInf : FpClass::kNaN;
    v.exp = kFp16MaxExp + 1;
    v.magnitude = static_cast<std::uint16_t>(man);
    return v;
  }
  if (field == 0) {
    v.cls = man == 0 ? FpClass::kZero : FpClass::kSubnormal;
    v.exp = kFp16MinExp;
    v.magnitude = static_cast<std::uint16_t>(man);
    return v;
  }
  v.cls = FpClass::kNormal;
  v.exp = field - kFp16Bias;
  v.magnitude = static_cast<std::uint16_t>(man | 0x400);
  return v;
}

double Fp16Value::to_double() const {
  switch (cls) {
    case FpClass::kInf: return sign * HUGE_VAL;
    case FpClass::kNaN: return std::nan("");
    default: return sign * std::ldexp(static_cast<double>(magnitude), exp - kFp16ManBits);
  }
}

DecomposedOperand decompose_fp16(const Fp16Value& v) {
  if (!v.finite()) throw NumericError("cannot decompose inf/nan operand");
  const unsigned m = v.magnitude;
  DecomposedOperand d;
  d.sign = v.sign;
  d.exp = v.exp;
  d.nibbles[2] = static_cast<std::uint8_t>((m >> 7) & 0xf);
  d.nibbles[1] = static_cast<std::uint8_t>((m >> 3) & 0xf);
  d.nibbles[0] = static_cast<std::uint8_t>((m & 0x7) << 1);
  return d;
}

std::vector<int> decompose_int(std::int64_t value, int width, Signedness signedness) {
  if (width != 4 && width != 8 && width != 12) {
    throw NumericError("integer width must be 4, 8 or 12, got " + std::to_string(width));
  }
  const std::int64_t lo = signedness == Signedness::kSigned ? -(std::int64_t{1} << (width - 1)) : 0;
  const std::int64_t hi = signedness == Signedness::kSigned ? (std::int64_t{1} << (width - 1)) - 1
                                                            : (std::int64_t{1} << width) - 1;
  if (value < lo || value > hi) {
    throw NumericError("value " + std::to_string(value) + " not representable in INT" +
                       std::to_string(width));
  }
  const int count = width / 4;
  std::vector<int> nibs(count);
  std::int64_t rest = value;
  for (int k = 0; k < count - 1; ++k) {
    nibs[k] = static_cast<int>(rest & 0xf);
    rest >>= 4;  // arithmetic: floor division keeps lower slices unsigned
  }
  nibs[count - 1] = static_cast<int>(rest);
  return nibs;
}

std::uint32_t round_scaled(bool negative, uint128 mag, int exp2, bool sticky, FloatFormat fmt) {
  const FormatTraits t = traits(fmt);
  const std::uint32_t sign_bit = negative ? (1u << (t.exp_bits + t.man_bits)) : 0u;
  if (mag == 0) return 0;

  const int emin = 1 - t.bias;
  const int top = exp2 + bit_length(mag) - 1;
  int exponent = top > emin ? top : emin;
  const int quantum = exponent - t.man_bits;

  uint128 kept;
  if (exp2 >= quantum) {
    kept = mag << (exp2 - quantum);
  } else {
    const int shift = quantum - exp2;
    if (shift >= 128) {
      kept = 0;  // strictly below half a quantum
    } else {
      kept = mag >> shift;
      const uint128 rem = mag & ((uint128{1} << shift) - 1);
      const uint128 half = uint128{1} << (shift - 1);
      const bool up = rem > half || (rem == half && (sticky || (kept & 1)));
      if (up) ++kept;
    }
  }
  if (kept >> (t.man_bits + 1)) {
    kept >>= 1;
    ++exponent;
  }
  const std::uint32_t max_field = (1u << t.exp_bits) - 1;
  std::uint32_t field;
  std::uint32_t man;
  if (kept < (uint128{1} << t.man_bits)) {
    field = 0;
    man = static_cast<std::uint32_t>(kept);
  } else {
    field = static_cast<std::uint32_t>(exponent + t.bias);
    man = static_cast<std::uint32_t>(kept) & ((1u << t.man_bits) - 1);
  }
  if (field >= max_field) return sign_bit | (max_field << t.man_bits);
  return sign_bit | (field << t.man_bits) | man;
}

std::uint16_t double_to_fp16(double x) {
  if (std::isnan(x)) return 0x7e00;
  if (std::isinf(x)) return x < 0 ? 0xfc00 : 0x7c00;
  if (x == 0) return std::signbit(x) ? 0x8000 : 0x0000;
  int e = 0;
  const double frac = std::frexp(std::fabs(x), &e);
  const auto mant = static_cast<std::uint64_t>(std::ldexp(frac, 53));
  return static_cast<std::uint16_t>(round_scaled(x < 0, mant, e - 53, false, FloatFormat::kFp16));
}

double fp16_to_double(std::uint16_t bits) { return decode_fp16(bits).to_double(); }

float fp32_from_bits(std::uint32_t bits) { return std::bit_cast<float>(bits); }
std::uint32_t fp32_to_bits(float f) { return std::bit_cast<std::uint32_t>(f); }

double bits_to_double(std::uint32_t bits, FloatFormat fmt) {
  if (fmt == FloatFormat::kFp16) return fp16_to_double(static_cast<std::uint16_t>(bits));
  return static_cast<double>(fp32_from_bits(bits));
}

}  // namespace mpipu
