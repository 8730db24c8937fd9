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

// Seeded synthetic operand streams. Transforms are written out by hand so a
// seed gives the same FP16 values with every standard library.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mpipu {

enum class Distribution : std::uint8_t { kLaplace, kNormal, kUniform };

std::string_view to_string(Distribution d);
Distribution parse_distribution(std::string_view name);

// normal: mean/sigma; laplace: location/diversity b; uniform: [loc-scale, loc+scale].
struct DistParams {
  double loc = 0.0;
  double scale = 1.0;
};

class Sampler {
 public:
  Sampler(Distribution dist, DistParams params, std::uint64_t seed, std::uint64_t stream = 0);

  double next();
  std::uint16_t next_fp16();  // next() rounded to FP16 (RNE)

 private:
  double unit_open();  // uniform in (0, 1)

  Distribution dist_;
  DistParams params_;
  std::mt19937_64 rng_;
};

struct VectorPair {
  std::vector<std::uint16_t> a;
  std::vector<std::uint16_t> b;
};

// Samples per batch; batch b of a run draws from Sampler(..., seed, b).
inline constexpr std::size_t kSampleBatch = 1024;

// `count` pairs of n-element FP16 vectors. Pair s comes from batch
// s / kSampleBatch, so any prefix or batch can be regenerated independently.
std::vector<VectorPair> sample_vectors(Distribution dist, DistParams params, int n,
                                       std::size_t count, std::uint64_t seed);

std::vector<VectorPair> sample_batch(Distribution dist, DistParams params, int n,
                                     std::size_t batch, std::size_t batch_len,
                                     std::uint64_t seed);

}  // namespace mpipu
