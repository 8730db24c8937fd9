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

#include "mpipu/tensor_file.hpp"

#include <fstream>
#include <iterator>
#include <sstream>
#include <unistd.h>

#include "mpipu/errors.hpp"

namespace mpipu {

namespace {

constexpr char kMagic[4] = {'M', 'P', 'T', '1'};

template <typename T>
T load_le(const std::string& s, std::size_t off) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(s[off + i])) << (8 * i);
  }
  return v;
}

template <typename T>
void store_le(std::string& s, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

std::uint64_t Tensor::element_count() const {
  std::uint64_t n = 1;
  for (std::uint64_t d : dims) n *= d;
  return n;
}

Tensor decode_tensor(const std::string& bytes) {
  if (bytes.size() < 12 || bytes.compare(0, 4, kMagic, 4) != 0) {
    throw IoError("not a tensor file (bad magic)");
  }
  const auto dtype = load_le<std::uint32_t>(bytes, 4);
  if (dtype != kTensorDtypeFp16) throw IoError("unsupported tensor dtype " + std::to_string(dtype));
  const auto rank = load_le<std::uint32_t>(bytes, 8);
  if (rank > kTensorMaxRank) throw IoError("tensor rank too large");
  std::size_t off = 12;
  if (bytes.size() < off + 8 * rank) throw IoError("truncated tensor header");
  Tensor t;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i, off += 8) {
    const auto d = load_le<std::uint64_t>(bytes, off);
    if (d != 0 && count > (std::uint64_t{1} << 40) / d) throw IoError("tensor too large");
    count *= d;
    t.dims.push_back(d);
  }
  if (bytes.size() - off != 2 * count) {
    throw IoError("tensor payload is " + std::to_string(bytes.size() - off) + " bytes, expected " +
                  std::to_string(2 * count));
  }
  t.data.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) t.data[i] = load_le<std::uint16_t>(bytes, off + 2 * i);
  return t;
}

std::string encode_tensor(const Tensor& t) {
  if (t.dims.size() > kTensorMaxRank) throw IoError("tensor rank too large");
  if (t.element_count() != t.data.size()) throw IoError("tensor dims do not match data size");
  std::string out(kMagic, 4);
  store_le<std::uint32_t>(out, kTensorDtypeFp16);
  store_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
  for (std::uint64_t d : t.dims) store_le<std::uint64_t>(out, d);
  for (std::uint16_t v : t.data) store_le<std::uint16_t>(out, v);
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

Tensor read_tensor_file(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_tensor_file(const std::filesystem::path& path, const Tensor& t) {
  write_file_atomic(path, encode_tensor(t));
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

}  // namespace mpipu
