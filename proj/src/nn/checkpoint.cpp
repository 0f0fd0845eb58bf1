// Copyright 2026 The retrosem Authors.
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

#include "retrosem/nn/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "retrosem/error.hpp"
#include "retrosem/io.hpp"

namespace retrosem::nn {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

constexpr const char* kFormat = "retrosem-checkpoint";

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const nlohmann::json& meta) {
  nlohmann::json header;
  header["format"] = kFormat;
  header["version"] = 1;
  header["meta"] = meta;
  header["tensors"] = nlohmann::json::array();
  std::string payload;
  for (const auto& [name, p] : params.entries()) {
    header["tensors"].push_back(
        {{"name", name}, {"shape", p.value.shape()}, {"offset", payload.size()}});
    const auto data = p.value.data();
    payload.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(double));
  }
  const std::string head = header.dump();
  const std::uint64_t len = head.size();
  std::string bytes(sizeof(len), '\0');
  std::memcpy(bytes.data(), &len, sizeof(len));
  bytes += head;
  bytes += payload;
  io::atomic_write(path, bytes);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  const std::string where = "checkpoint '" + path.string() + "'";
  std::uint64_t len = 0;
  if (bytes.size() < sizeof(len)) throw ParseError(where + ": truncated header");
  std::memcpy(&len, bytes.data(), sizeof(len));
  if (bytes.size() < sizeof(len) + len) throw ParseError(where + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(sizeof(len), len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  if (header.value("format", "") != kFormat) throw ParseError(where + ": not a checkpoint");
  const std::size_t base = sizeof(len) + len;
  Checkpoint ck;
  ck.meta = header.value("meta", nlohmann::json::object());
  for (const auto& entry : header.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<Shape>();
    const auto offset = entry.at("offset").get<std::size_t>();
    const std::size_t count = shape_size(shape);
    if (base + offset + count * sizeof(double) > bytes.size()) {
      throw ParseError(where + ": tensor '" + name + "' runs past end of file");
    }
    std::vector<double> values(count);
    std::memcpy(values.data(), bytes.data() + base + offset, count * sizeof(double));
    ck.tensors.emplace(name, std::make_pair(shape, std::move(values)));
  }
  return ck;
}

void load_into(const Checkpoint& checkpoint, ParameterSet& params) {
  for (auto& [name, p] : params.entries()) {
    auto it = checkpoint.tensors.find(name);
    if (it == checkpoint.tensors.end()) throw DataError("checkpoint lacks parameter '" + name + "'");
    if (it->second.first != p.value.shape()) {
      throw DimensionError("checkpoint parameter '" + name + "' has shape " +
                           shape_string(it->second.first) + ", model expects " +
                           shape_string(p.value.shape()));
    }
    std::copy(it->second.second.begin(), it->second.second.end(),
              p.value.mutable_data().begin());
  }
}

}  // namespace retrosem::nn
