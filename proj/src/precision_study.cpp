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

#include "mpipu/precision_study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mpipu/errors.hpp"
#include "mpipu/exact.hpp"
#include "mpipu/metrics.hpp"
#include "mpipu/parallel.hpp"

namespace mpipu {

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lo + hi);
}

std::vector<SweepRow> precision_sweep(const SweepSpec& spec) {
  if (spec.w_min < kProductBits || spec.w_max > 38 || spec.w_min > spec.w_max) {
    throw ConfigError("sweep precision range must lie in [9, 38]");
  }
  if (spec.count == 0) throw ConfigError("sweep needs at least one sample");
  const int widths = spec.w_max - spec.w_min + 1;
  const std::size_t count = spec.count;

  std::vector<double> abs_err(static_cast<std::size_t>(widths) * count);
  std::vector<double> are(abs_err.size());
  std::vector<std::uint8_t> contam(abs_err.size());

  const std::size_t batches = (count + kSampleBatch - 1) / kSampleBatch;
  parallel_for(batches, spec.threads, [&](std::size_t batch) {
    const std::size_t first = batch * kSampleBatch;
    const std::size_t len = std::min(kSampleBatch, count - first);
    const std::vector<VectorPair> pairs =
        sample_batch(spec.dist, spec.params, spec.lanes, batch, len, spec.seed);
    std::vector<Fp16Value> a(spec.lanes);
    std::vector<Fp16Value> b(spec.lanes);
    for (std::size_t s = 0; s < len; ++s) {
      for (int k = 0; k < spec.lanes; ++k) {
        a[k] = decode_fp16(pairs[s].a[k]);
        b[k] = decode_fp16(pairs[s].b[k]);
      }
      const ExactValue exact = exact_fp_ip(a, b);
      const std::uint32_t reference = exact.round(spec.acc_format);
      const double exact_d = exact.to_double();
      for (int wi = 0; wi < widths; ++wi) {
        IpuConfig cfg;
        cfg.lanes = spec.lanes;
        cfg.precision = spec.w_min + wi;
        cfg.sw_precision = spec.sw_precision;
        const FpIpResult r = fp_ip_approx(a, b, cfg, spec.acc_format);
        const ErrorReport e = error_metrics(r.bits, reference, exact_d, spec.acc_format);
        const std::size_t slot = static_cast<std::size_t>(wi) * count + first + s;
        abs_err[slot] = e.abs_error;
        are[slot] = e.are_percent;
        contam[slot] = static_cast<std::uint8_t>(e.contaminated_bits);
      }
    }
  });

  std::vector<SweepRow> rows;
  for (int wi = 0; wi < widths; ++wi) {
    const std::size_t base = static_cast<std::size_t>(wi) * count;
    SweepRow row;
    row.dist = spec.dist;
    row.acc_format = spec.acc_format;
    row.w = spec.w_min + wi;
    row.samples = count;
    row.seed = spec.seed;
    std::vector<double> errs(abs_err.begin() + base, abs_err.begin() + base + count);
    std::vector<double> ares;
    ares.reserve(count);
    std::vector<double> bits(count);
    double bit_sum = 0;
    for (std::size_t s = 0; s < count; ++s) {
      if (std::isnan(are[base + s])) {
        ++row.are_undefined;
      } else {
        ares.push_back(are[base + s]);
      }
      bits[s] = contam[base + s];
      bit_sum += contam[base + s];
    }
    row.median_abs_err = median(std::move(errs));
    row.median_are_pct = median(std::move(ares));
    row.median_contam_bits = median(std::move(bits));
    row.mean_contam_bits = bit_sum / static_cast<double>(count);
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv_row(const SweepRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%d,%.9g,%.9g,%.9g,%.9g,%zu,%llu",
                std::string(to_string(row.dist)).c_str(),
                std::string(to_string(row.acc_format)).c_str(), row.w, row.median_abs_err,
                row.median_are_pct, row.median_contam_bits, row.mean_contam_bits, row.samples,
                static_cast<unsigned long long>(row.seed));
  return buf;
}

}  // namespace mpipu
