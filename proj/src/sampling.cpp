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

#include "mpipu/sampling.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mpipu/errors.hpp"
#include "mpipu/fp_codec.hpp"

namespace mpipu {

std::string_view to_string(Distribution d) {
  switch (d) {
    case Distribution::kLaplace: return "laplace";
    case Distribution::kNormal: return "normal";
    case Distribution::kUniform: return "uniform";
  }
  return "?";
}

Distribution parse_distribution(std::string_view name) {
  if (name == "laplace") return Distribution::kLaplace;
  if (name == "normal") return Distribution::kNormal;
  if (name == "uniform") return Distribution::kUniform;
  throw ConfigError("unknown distribution '" + std::string(name) + "'");
}

Sampler::Sampler(Distribution dist, DistParams params, std::uint64_t seed, std::uint64_t stream)
    : dist_(dist), params_(params) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  rng_.seed(seq);
}

double Sampler::unit_open() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
}

double Sampler::next() {
  switch (dist_) {
    case Distribution::kUniform:
      return params_.loc + params_.scale * (2.0 * unit_open() - 1.0);
    case Distribution::kNormal: {
      const double u1 = unit_open();
      const double u2 = unit_open();
      return params_.loc +
             params_.scale * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    case Distribution::kLaplace: {
      const double u = unit_open() - 0.5;
      const double mag = -std::log(1.0 - 2.0 * std::fabs(u));
      return params_.loc + params_.scale * (u < 0 ? -mag : mag);
    }
  }
  return 0.0;
}

std::uint16_t Sampler::next_fp16() { return double_to_fp16(next()); }

std::vector<VectorPair> sample_batch(Distribution dist, DistParams params, int n,
                                     std::size_t batch, std::size_t batch_len,
                                     std::uint64_t seed) {
  Sampler s(dist, params, seed, batch);
  std::vector<VectorPair> out(batch_len);
  for (VectorPair& p : out) {
    p.a.resize(n);
    p.b.resize(n);
    for (int k = 0; k < n; ++k) {
      p.a[k] = s.next_fp16();
      p.b[k] = s.next_fp16();
    }
  }
  return out;
}

std::vector<VectorPair> sample_vectors(Distribution dist, DistParams params, int n,
                                       std::size_t count, std::uint64_t seed) {
  std::vector<VectorPair> out;
  out.reserve(count);
  for (std::size_t batch = 0; out.size() < count; ++batch) {
    const std::size_t len = std::min(kSampleBatch, count - out.size());
    for (VectorPair& p : sample_batch(dist, params, n, batch, len, seed)) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace mpipu
