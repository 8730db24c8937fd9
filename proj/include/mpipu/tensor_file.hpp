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

// Binary tensor container.
//
//   offset 0   "MPT1"
//   offset 4   dtype   u32 LE (1 = FP16)
//   offset 8   rank    u32 LE
//   offset 12  dims    rank x u64 LE
//   then       payload, 2 * prod(dims) bytes, each element u16 LE
//
// Trailing bytes are an error.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mpipu {

inline constexpr std::uint32_t kTensorDtypeFp16 = 1;
inline constexpr int kTensorMaxRank = 8;

struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<std::uint16_t> data;  // FP16 bit patterns, row-major

  std::uint64_t element_count() const;
};

// Throws IoError on malformed input.
Tensor decode_tensor(const std::string& bytes);
std::string encode_tensor(const Tensor& t);

Tensor read_tensor_file(const std::filesystem::path& path);
void write_tensor_file(const std::filesystem::path& path, const Tensor& t);

// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace mpipu
