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

// IEEE binary16/binary32 codec and the nibble decomposition consumed by the
// inner product unit.

#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace mpipu {

using int128 = __int128;
using uint128 = unsigned __int128;

enum class FpClass : std::uint8_t { kZero, kSubnormal, kNormal, kInf, kNaN };

enum class FloatFormat : std::uint8_t { kFp16, kFp32 };

std::string_view to_string(FpClass c);
std::string_view to_string(FloatFormat f);
FloatFormat parse_float_format(std::string_view name);

inline constexpr int kFp16Bias = 15;
inline constexpr int kFp16ManBits = 10;
inline constexpr int kFp16MinExp = -14;
inline constexpr int kFp16MaxExp = 15;

// Decoded half-precision number. For finite values the real value is
// sign * magnitude * 2^(exp - 10); subnormals and zeros carry exp = -14.
struct Fp16Value {
  int sign = 1;
  int exp = kFp16MinExp;
  std::uint16_t magnitude = 0;
  FpClass cls = FpClass::kZero;

  bool finite() const { return cls != FpClass::kInf && cls != FpClass::kNaN; }
  bool is_zero() const { return cls == FpClass::kZero; }
  double to_double() const;
};

Fp16Value decode_fp16(std::uint16_t bits);

// Multiplier-side operand: one sign plus three unsigned 4-bit slices.
// nibbles[0] is N0 (bits 2..0 of the magnitude followed by an inserted 0),
// nibbles[2] is N2 (bits 10..7). The value is
// sign * (N2*256 + N1*16 + N0) * 2^(exp - 11).
struct DecomposedOperand {
  int sign = 1;
  std::array<std::uint8_t, 3> nibbles{};
  int exp = kFp16MinExp;

  int signed_nibble(int k) const { return sign * static_cast<int>(nibbles[k]); }
};

// Throws NumericError for inf/nan.
DecomposedOperand decompose_fp16(const Fp16Value& v);

enum class Signedness : std::uint8_t { kSigned, kUnsigned };

// Little-endian 4-bit slices of an INT4/INT8/INT12 value. For signed values
// the top slice is two's-complement in [-8, 7] and lower slices are in
// [0, 15]; the sum of nib[k] * 16^k reproduces the value. Throws NumericError
// when the value is not representable or the width is not 4, 8 or 12.
std::vector<int> decompose_int(std::int64_t value, int width,
                               Signedness signedness = Signedness::kSigned);

// Round sign * (mag + sticky) * 2^exp2 to the target format with
// round-to-nearest-even. `sticky` marks non-zero bits below mag's LSB; the
// caller must keep at least man_bits + 3 bits in mag when sticky is set.
// Overflow gives infinity, tiny values go subnormal or zero. A zero
// magnitude always yields +0.
std::uint32_t round_scaled(bool negative, uint128 mag, int exp2, bool sticky,
                           FloatFormat fmt);

inline std::uint16_t round_to_fp16(bool negative, uint128 mag, int exp2) {
  return static_cast<std::uint16_t>(
      round_scaled(negative, mag, exp2, false, FloatFormat::kFp16));
}
inline std::uint32_t round_to_fp32(bool negative, uint128 mag, int exp2) {
  return round_scaled(negative, mag, exp2, false, FloatFormat::kFp32);
}

std::uint16_t double_to_fp16(double x);
double fp16_to_double(std::uint16_t bits);
double bits_to_double(std::uint32_t bits, FloatFormat fmt);
float fp32_from_bits(std::uint32_t bits);
std::uint32_t fp32_to_bits(float f);

int bit_length(uint128 v);

}  // namespace mpipu
