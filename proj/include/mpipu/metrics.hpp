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

#pragma once

#include <cstdint>

#include "mpipu/exact.hpp"
#include "mpipu/fp_codec.hpp"

namespace mpipu {

// Error of an approximate result against the correctly rounded reference
// round(exact) in the same format.
struct ErrorReport {
  double abs_error = 0;            // |approx - reference|
  double are_percent = 0;          // 100 * abs_error / |exact|; 0 when both are 0
  bool are_defined = true;         // false when exact == 0 but approx != 0
  int contaminated_bits = 0;       // bit length of approx_bits XOR reference_bits
  double abs_error_vs_exact = 0;   // |approx - exact|, includes the format's own rounding
  std::uint32_t reference_bits = 0;
};

int contaminated_bits(std::uint32_t approx_bits, std::uint32_t reference_bits);

ErrorReport error_metrics(std::uint32_t approx_bits, const ExactValue& exact, FloatFormat fmt);

// Same metrics when the reference rounding and exact double are cached.
ErrorReport error_metrics(std::uint32_t approx_bits, std::uint32_t reference_bits,
                          double exact_value, FloatFormat fmt);

}  // namespace mpipu
