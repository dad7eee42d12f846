/* Copyright 2026 The vaealign Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "vaealign/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "vaealign/errors.hpp"

namespace vaealign {

namespace {

constexpr char kMagic[] = "VAEALIGN-CKPT\n";
constexpr std::size_t kMagicLength = sizeof(kMagic) - 1;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    throw FormatError(path.string() + ": truncated checkpoint");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  out.write(kMagic, kMagicLength);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, params.size());
  for (ParamId id = 0; id < params.size(); ++id) {
    const std::string& name = params.name(id);
    const Tensor& t = params.value(id);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
    for (double v : t.values()) put<double>(out, v);
  }
  if (!out) throw FormatError("write failed for checkpoint " + path.string());
}

ParameterSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  std::array<char, kMagicLength> magic{};
  if (!in.read(magic.data(), kMagicLength) ||
      std::memcmp(magic.data(), kMagic, kMagicLength) != 0) {
    throw FormatError(path.string() + ": not a checkpoint file");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " +
                      std::to_string(version));
  }
  const auto count = get<std::uint64_t>(in, path);
  ParameterSet params;
  for (std::uint64_t p = 0; p < count; ++p) {
    const auto name_length = get<std::uint32_t>(in, path);
    std::string name(name_length, '\0');
    if (!in.read(name.data(), name_length)) throw FormatError(path.string() + ": truncated name");
    const auto rank = get<std::uint32_t>(in, path);
    if (rank > 8) throw FormatError(path.string() + ": implausible rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = get<std::uint64_t>(in, path);
    Tensor t(shape);
    for (double& v : t.values()) v = get<double>(in, path);
    params.add(std::move(name), std::move(t));
  }
  return params;
}

void restore_parameters(ParameterSet& target, const ParameterSet& source) {
  for (ParamId id = 0; id < target.size(); ++id) {
    const auto found = source.find(target.name(id));
    if (!found) throw FormatError("checkpoint is missing parameter " + target.name(id));
    const Tensor& value = source.value(*found);
    if (value.size() != target.value(id).size()) {
      throw FormatError("checkpoint parameter " + target.name(id) + " has shape " +
                        shape_string(value.shape()) + ", expected " +
                        shape_string(target.value(id).shape()));
    }
    target.value(id) = Tensor(target.value(id).shape(),
                              std::vector<double>(value.values().begin(), value.values().end()));
  }
}

}  // namespace vaealign
