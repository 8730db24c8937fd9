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

// IPU precision sweep: approximate FP-IP against the exact oracle over
// synthetic operand distributions.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpipu/fp_codec.hpp"
#include "mpipu/ipu.hpp"
#include "mpipu/sampling.hpp"

namespace mpipu {

struct SweepSpec {
  Distribution dist = Distribution::kNormal;
  DistParams params;
  FloatFormat acc_format = FloatFormat::kFp16;
  int w_min = 9;
  int w_max = 38;
  int lanes = 16;
  int sw_precision = kNoMasking;
  std::size_t count = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct SweepRow {
  Distribution dist = Distribution::kNormal;
  FloatFormat acc_format = FloatFormat::kFp16;
  int w = 0;
  double median_abs_err = 0;
  double median_are_pct = 0;
  double median_contam_bits = 0;
  double mean_contam_bits = 0;
  std::size_t samples = 0;
  std::size_t are_undefined = 0;  // samples with exact == 0 and approx != 0
  std::uint64_t seed = 0;
};

// Median over the values (mean of the two middle elements for even sizes).
double median(std::vector<double> values);

// One row per w in [w_min, w_max] using the single-cycle truncating IPU(w).
std::vector<SweepRow> precision_sweep(const SweepSpec& spec);

inline constexpr const char* kSweepCsvHeader =
    "dist,acc_format,w,median_abs_err,median_are_pct,median_contam_bits,mean_contam_bits,"
    "samples,seed";

std::string sweep_csv_row(const SweepRow& row);

}  // namespace mpipu
