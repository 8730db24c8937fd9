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

#include "mpipu/exact.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mpipu/errors.hpp"

namespace mpipu {
namespace {

// Lowest weight of any FP16 x FP16 product: 2^(-14-14-20).
constexpr int kProductBaseExp = -48;
constexpr int kRoundKeepBits = 100;

}  // namespace

ExactValue::ExactValue(BigInt mantissa, int exp) : mantissa_(std::move(mantissa)), exp_(exp) {
  if (mantissa_.is_zero()) {
    exp_ = 0;
    return;
  }
  const unsigned tz = boost::multiprecision::lsb(boost::multiprecision::abs(mantissa_));
  if (tz > 0) {
    mantissa_ >>= tz;
    exp_ += static_cast<int>(tz);
  }
}

ExactValue ExactValue::from_fp16(const Fp16Value& v) {
  if (!v.finite()) throw NumericError("inf/nan has no exact value");
  return ExactValue(BigInt(v.sign * static_cast<int>(v.magnitude)), v.exp - kFp16ManBits);
}

ExactValue ExactValue::from_bits(std::uint32_t bits, FloatFormat fmt) {
  if (fmt == FloatFormat::kFp16) return from_fp16(decode_fp16(static_cast<std::uint16_t>(bits)));
  const bool neg = bits >> 31;
  const int field = (bits >> 23) & 0xff;
  const std::int64_t man = bits & 0x7fffff;
  if (field == 0xff) throw NumericError("inf/nan has no exact value");
  const std::int64_t m = field == 0 ? man : (man | 0x800000);
  const int e = (field == 0 ? 1 : field) - 127 - 23;
  return ExactValue(BigInt(neg ? -m : m), e);
}

ExactValue operator+(const ExactValue& x, const ExactValue& y) {
  if (x.is_zero()) return y;
  if (y.is_zero()) return x;
  if (x.exp_ <= y.exp_) return ExactValue(x.mantissa_ + (y.mantissa_ << (y.exp_ - x.exp_)), x.exp_);
  return ExactValue(y.mantissa_ + (x.mantissa_ << (x.exp_ - y.exp_)), y.exp_);
}

ExactValue operator*(const ExactValue& x, const ExactValue& y) {
  return ExactValue(x.mantissa_ * y.mantissa_, x.exp_ + y.exp_);
}

std::strong_ordering operator<=>(const ExactValue& x, const ExactValue& y) {
  const int s = (x - y).sign();
  if (s < 0) return std::strong_ordering::less;
  if (s > 0) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

double ExactValue::to_double() const {
  if (is_zero()) return 0.0;
  BigInt m = mantissa_;
  int e = exp_;
  const unsigned bits = boost::multiprecision::msb(boost::multiprecision::abs(m)) + 1;
  if (bits > 60) {
    m >>= bits - 60;  // enough bits for a double; truncation is below its ulp
    e += static_cast<int>(bits - 60);
  }
  return std::ldexp(m.convert_to<double>(), e);
}

std::uint32_t ExactValue::round(FloatFormat fmt) const {
  if (is_zero()) return 0;
  BigInt m = boost::multiprecision::abs(mantissa_);
  int e = exp_;
  bool sticky = false;
  const unsigned bits = boost::multiprecision::msb(m) + 1;
  if (bits > kRoundKeepBits) {
    const unsigned drop = bits - kRoundKeepBits;
    sticky = boost::multiprecision::lsb(m) < drop;
    m >>= drop;
    e += static_cast<int>(drop);
  }
  const auto lo = static_cast<std::uint64_t>(m & BigInt(0xffffffffffffffffULL));
  const auto hi = static_cast<std::uint64_t>(m >> 64);
  const uint128 mag = (uint128{hi} << 64) | lo;
  return round_scaled(sign() < 0, mag, e, sticky, fmt);
}

std::string ExactValue::to_string() const {
  return mantissa_.str() + "*2^" + std::to_string(exp_);
}

ExactValue exact_fp_ip(std::span<const Fp16Value> a, std::span<const Fp16Value> b) {
  if (a.size() != b.size()) throw std::invalid_argument("operand vectors differ in length");
  BigInt sum = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!a[k].finite() || !b[k].finite()) throw NumericError("inf/nan operand");
    const std::int64_t p = static_cast<std::int64_t>(a[k].sign * b[k].sign) * a[k].magnitude *
                           b[k].magnitude;
    if (p == 0) continue;
    const int weight = a[k].exp + b[k].exp - 2 * kFp16ManBits;
    sum += BigInt(p) << (weight - kProductBaseExp);
  }
  return ExactValue(std::move(sum), kProductBaseExp);
}

ExactValue exact_nibble_iteration(std::span<const DecomposedOperand> a,
                                  std::span<const DecomposedOperand> b, int i, int j,
                                  LaneMask mask) {
  BigInt sum = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (lane_set(mask, static_cast<int>(k))) continue;
    const int p = a[k].sign * b[k].sign * a[k].nibbles[i] * b[k].nibbles[j];
    if (p == 0) continue;
    const int weight = a[k].exp + b[k].exp + 4 * (i + j) - 22;
    sum += BigInt(p) << (weight - (kProductBaseExp - 2));
  }
  return ExactValue(std::move(sum), kProductBaseExp - 2);
}

ExactValue iteration_error_bound(int i, int j, int precision, int max_exp, int n) {
  if (n < 1 || precision < 1) throw std::invalid_argument("iteration_error_bound needs n >= 1, precision >= 1");
  return ExactValue(BigInt(225) * (n - 1), 4 * (i + j) - 22 + max_exp - precision);
}

}  // namespace mpipu
