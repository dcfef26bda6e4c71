/*
 * Copyright 2026 The actmap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "actmap/autodiff.hpp"
#include "actmap/error.hpp"

namespace actmap {
namespace {

constexpr std::array<char, 8> kMagic = {'A', 'C', 'T', 'M', 'A', 'P', 'N', 'P'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <typename T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("checkpoint truncated");
  return to_little(v);
}

}  // namespace

void write_checkpoint(std::ostream& out, const NetworkParams& params) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.num_layers()));
  for (const auto& s : params.shapes()) {
    put<std::uint64_t>(out, s.rows);
    put<std::uint64_t>(out, s.cols);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.activation));
  }
  put<std::uint64_t>(out, params.size());
  for (double v : params.values()) put<double>(out, v);
  if (!out) throw IoError("failed to write checkpoint");
}

NetworkParams read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw IoError("not an actmap checkpoint");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto layers = get<std::uint32_t>(in);
  std::vector<LayerShape> shapes;
  shapes.reserve(layers);
  for (std::uint32_t l = 0; l < layers; ++l) {
    LayerShape s;
    s.rows = get<std::uint64_t>(in);
    s.cols = get<std::uint64_t>(in);
    const auto act = get<std::uint32_t>(in);
    if (act > static_cast<std::uint32_t>(Activation::softplus)) {
      throw IoError("checkpoint has unknown activation tag");
    }
    s.activation = static_cast<Activation>(act);
    shapes.push_back(s);
  }
  const auto count = get<std::uint64_t>(in);
  if (count != parameter_count(shapes)) throw IoError("checkpoint value count mismatch");
  std::vector<double> values(count);
  for (auto& v : values) v = get<double>(in);
  return NetworkParams(std::move(shapes), std::move(values));
}

void save_checkpoint(const std::string& path, const NetworkParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_checkpoint(out, params);
}

NetworkParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace actmap
