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

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "retrosem/nn/tensor.hpp"

namespace retrosem::nn {

enum class Init {
  kZeros,
  kOnes,
  kFanIn,   // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)), fan_in = shape[0]
  kNormal,  // normal(0, 0.02)
};

/// A named trainable tensor with its AdamW state.
struct Parameter {
  Tensor value;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
  std::vector<std::size_t> frozen_rows;
};

/// Owns the trainable parameters of one model, keyed by unique name.
class ParameterSet {
 public:
  /// Creates and initialises a parameter. Throws ConfigError on duplicate names.
  Tensor add(const std::string& name, Shape shape, Init init, std::mt19937_64& rng,
             std::size_t fan_in = 0);

  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  /// Pins a row at its current value; its gradient is discarded before each step.
  void freeze_row(const std::string& name, std::size_t row);

  void zero_grad();
  std::size_t scalar_count() const;
  std::vector<std::string> names() const;
  std::vector<Tensor> tensors() const;

  std::map<std::string, Parameter>& entries() { return params_; }
  const std::map<std::string, Parameter>& entries() const { return params_; }

  /// Copies values (not optimizer state) from another set with identical names and shapes.
  void copy_values_from(const ParameterSet& other);

 private:
  std::map<std::string, Parameter> params_;
};

}  // namespace retrosem::nn
