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

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "retrosem/nn/params.hpp"

namespace retrosem::nn {

// Checkpoint layout:
//   bytes 0..7   little-endian uint64 header length L
//   bytes 8..8+L UTF-8 JSON header
//                {"format": "retrosem-checkpoint", "version": 1, "meta": {...},
//                 "tensors": [{"name", "shape", "offset"}, ...]}
//   remainder    little-endian f64 payload; offsets are byte offsets into it

struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, std::pair<Shape, std::vector<double>>> tensors;
};

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const nlohmann::json& meta);
Checkpoint read_checkpoint(const std::filesystem::path& path);
/// Loads values into an already-constructed set; names and shapes must match.
void load_into(const Checkpoint& checkpoint, ParameterSet& params);

}  // namespace retrosem::nn
