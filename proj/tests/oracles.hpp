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

// Reference implementations used only by tests. None of them call into the
// library's arithmetic.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mpipu/exact.hpp"
#include "mpipu/fp_codec.hpp"

namespace mpipu::oracle {

// FP16 value straight from the IEEE field layout.
inline double fp16_value(std::uint16_t bits) {
  const int sign = (bits >> 15) ? -1 : 1;
  const int e = (bits >> 10) & 0x1f;
  const int f = bits & 0x3ff;
  if (e == 0x1f) return f ? std::nan("") : sign * INFINITY;
  if (e == 0) return sign * std::ldexp(static_cast<double>(f), -24);
  return sign * std::ldexp(static_cast<double>(1024 + f), e - 25);
}

// All non-negative finite FP16 values in increasing order (index == bits).
inline const std::vector<double>& fp16_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t;
    for (std::uint32_t b = 0; b < 0x7c00; ++b) t.push_back(fp16_value(static_cast<std::uint16_t>(b)));
    return t;
  }();
  return table;
}

// Nearest FP16 to an exactly representable double, ties to even, by search
// over the full table. Magnitudes at or past 65520 overflow to infinity.
inline std::uint16_t round_fp16(double x) {
  const std::uint16_t sign = std::signbit(x) ? 0x8000 : 0;
  const double m = std::fabs(x);
  if (m >= 65520.0) return sign | 0x7c00;
  const auto& t = fp16_table();
  const auto it = std::lower_bound(t.begin(), t.end(), m);
  std::size_t hi = static_cast<std::size_t>(it - t.begin());
  if (hi < t.size() && t[hi] == m) return static_cast<std::uint16_t>(sign | hi);
  const std::size_t lo = hi - 1;
  const double dl = m - t[lo];
  const double dh = t[hi] - m;
  std::size_t pick = dl < dh ? lo : dh < dl ? hi : (lo % 2 == 0 ? lo : hi);
  if (pick == 0 && sign) return 0x8000;
  return static_cast<std::uint16_t>(sign | pick);
}

// Exact FP16 inner product as an integer multiple of 2^-48, summed pairwise
// in reversed order.
struct FixedSum {
  __int128 mag = 0;
  static constexpr int kExp = -48;
};

inline __int128 fixed_product(std::uint16_t a, std::uint16_t b) {
  auto field = [](std::uint16_t v, int& exp) -> __int128 {
    const int e = (v >> 10) & 0x1f;
    const int f = v & 0x3ff;
    exp = (e == 0 ? 1 : e) - 25;  // value = mant * 2^exp
    const __int128 mant = e == 0 ? f : 1024 + f;
    return (v >> 15) ? -mant : mant;
  };
  int ea = 0, eb = 0;
  const __int128 p = field(a, ea) * field(b, eb);
  return p << (ea + eb - FixedSum::kExp);
}

inline FixedSum fixed_ip(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b) {
  std::vector<__int128> terms;
  for (std::size_t k = a.size(); k-- > 0;) terms.push_back(fixed_product(a[k], b[k]));
  while (terms.size() > 1) {
    std::vector<__int128> next;
    for (std::size_t k = 0; k + 1 < terms.size(); k += 2) next.push_back(terms[k] + terms[k + 1]);
    if (terms.size() % 2) next.push_back(terms.back());
    terms.swap(next);
  }
  return {terms.empty() ? 0 : terms[0]};
}

inline BigInt to_bigint(__int128 v) {
  const bool neg = v < 0;
  unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
  BigInt r = static_cast<std::uint64_t>(u >> 64);
  r <<= 64;
  r += static_cast<std::uint64_t>(u);
  return neg ? BigInt(-r) : r;
}

// Random finite FP16 with exponents spread over the whole range.
inline std::uint16_t random_finite_fp16(std::mt19937_64& g) {
  for (;;) {
    const auto v = static_cast<std::uint16_t>(g());
    if (((v >> 10) & 0x1f) != 0x1f) return v;
  }
}

}  // namespace mpipu::oracle
