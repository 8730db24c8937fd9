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

#include "mpipu/metrics.hpp"

#include <bit>
#include <cmath>

namespace mpipu {

int contaminated_bits(std::uint32_t approx_bits, std::uint32_t reference_bits) {
  return std::bit_width(approx_bits ^ reference_bits);
}

ErrorReport error_metrics(std::uint32_t approx_bits, std::uint32_t reference_bits,
                          double exact_value, FloatFormat fmt) {
  ErrorReport r;
  r.reference_bits = reference_bits;
  const double approx = bits_to_double(approx_bits, fmt);
  const double reference = bits_to_double(reference_bits, fmt);
  r.abs_error = std::fabs(approx - reference);
  r.abs_error_vs_exact = std::fabs(approx - exact_value);
  r.contaminated_bits = contaminated_bits(approx_bits, reference_bits);
  if (exact_value == 0.0) {
    r.are_defined = approx == 0.0;
    r.are_percent = r.are_defined ? 0.0 : std::nan("");
  } else {
    r.are_percent = 100.0 * r.abs_error / std::fabs(exact_value);
  }
  return r;
}

ErrorReport error_metrics(std::uint32_t approx_bits, const ExactValue& exact, FloatFormat fmt) {
  const std::uint32_t reference = exact.round(fmt);
  ErrorReport r = error_metrics(approx_bits, reference, exact.to_double(), fmt);
  r.abs_error_vs_exact = (ExactValue::from_bits(approx_bits, fmt) - exact).abs().to_double();
  if (exact.is_zero()) {
    r.are_defined = r.abs_error == 0.0 && bits_to_double(approx_bits, fmt) == 0.0;
    r.are_percent = r.are_defined ? 0.0 : std::nan("");
  }
  return r;
}

}  // namespace mpipu
