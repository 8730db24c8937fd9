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

// Exact dyadic arithmetic used as the reference oracle for the IPU model.

#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "mpipu/alignment.hpp"
#include "mpipu/fp_codec.hpp"

namespace mpipu {

using BigInt = boost::multiprecision::cpp_int;

// mantissa * 2^exp, kept canonical: mantissa odd, or zero with exp 0.
class ExactValue {
 public:
  ExactValue() = default;
  ExactValue(BigInt mantissa, int exp);
  explicit ExactValue(std::int64_t v) : ExactValue(BigInt(v), 0) {}

  static ExactValue from_fp16(const Fp16Value& v);  // throws NumericError for inf/nan
  static ExactValue from_bits(std::uint32_t bits, FloatFormat fmt);
  static ExactValue pow2(int e) { return ExactValue(BigInt(1), e); }

  const BigInt& mantissa() const { return mantissa_; }
  int exp() const { return exp_; }
  int sign() const { return mantissa_.sign(); }
  bool is_zero() const { return mantissa_.is_zero(); }

  ExactValue operator-() const { return ExactValue(-mantissa_, exp_); }
  ExactValue abs() const { return ExactValue(boost::multiprecision::abs(mantissa_), exp_); }
  friend ExactValue operator+(const ExactValue& x, const ExactValue& y);
  friend ExactValue operator-(const ExactValue& x, const ExactValue& y) { return x + (-y); }
  friend ExactValue operator*(const ExactValue& x, const ExactValue& y);
  ExactValue& operator+=(const ExactValue& y) { return *this = *this + y; }

  friend bool operator==(const ExactValue& x, const ExactValue& y) {
    return x.exp_ == y.exp_ && x.mantissa_ == y.mantissa_;
  }
  friend std::strong_ordering operator<=>(const ExactValue& x, const ExactValue& y);

  double to_double() const;
  // Round-to-nearest-even into fmt.
  std::uint32_t round(FloatFormat fmt) const;
  std::string to_string() const;  // "<mantissa>*2^<exp>"

 private:
  BigInt mantissa_;
  int exp_ = 0;
};

// Exact sum of a[k]*b[k]; no alignment or truncation. Throws NumericError on
// inf/nan.
ExactValue exact_fp_ip(std::span<const Fp16Value> a, std::span<const Fp16Value> b);

// Exact value of nibble iteration (i, j) over the lanes not in `mask`.
ExactValue exact_nibble_iteration(std::span<const DecomposedOperand> a,
                                  std::span<const DecomposedOperand> b, int i, int j,
                                  LaneMask mask = 0);

// 225 * 2^(4(i+j)-22) * 2^(max_exp - precision) * (n - 1), exactly.
ExactValue iteration_error_bound(int i, int j, int precision, int max_exp, int n);

}  // namespace mpipu
