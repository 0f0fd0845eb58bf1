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

#include "retrosem/nn/params.hpp"

#include <cmath>

#include "retrosem/error.hpp"

namespace retrosem::nn {

Tensor ParameterSet::add(const std::string& name, Shape shape, Init init, std::mt19937_64& rng,
                         std::size_t fan_in) {
  if (params_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  Tensor t = Tensor::zeros(shape, true);
  auto data = t.mutable_data();
  switch (init) {
    case Init::kZeros:
      break;
    case Init::kOnes:
      std::fill(data.begin(), data.end(), 1.0);
      break;
    case Init::kFanIn: {
      const std::size_t fi = fan_in ? fan_in : (shape.empty() ? 1 : shape[0]);
      const double bound = 1.0 / std::sqrt(static_cast<double>(fi));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : data) v = dist(rng);
      break;
    }
    case Init::kNormal: {
      std::normal_distribution<double> dist(0.0, 0.02);
      for (double& v : data) v = dist(rng);
      break;
    }
  }
  Parameter p;
  p.value = t;
  p.first_moment.assign(t.size(), 0.0);
  p.second_moment.assign(t.size(), 0.0);
  params_.emplace(name, std::move(p));
  return t;
}

Tensor ParameterSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second.value;
}

void ParameterSet::freeze_row(const std::string& name, std::size_t row) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
  if (row >= it->second.value.rows()) {
    throw IndexError("freeze_row: row " + std::to_string(row) + " outside " +
                     shape_string(it->second.value.shape()));
  }
  it->second.frozen_rows.push_back(row);
}

void ParameterSet::zero_grad() {
  for (auto& [name, p] : params_) p.value.zero_grad();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  for (const auto& [name, p] : params_) out.push_back(p.value);
  return out;
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  for (auto& [name, p] : params_) {
    auto it = other.params_.find(name);
    if (it == other.params_.end()) throw DataError("missing parameter '" + name + "'");
    if (it->second.value.shape() != p.value.shape()) {
      throw DimensionError("parameter '" + name + "' has shape " +
                           shape_string(it->second.value.shape()) + ", expected " +
                           shape_string(p.value.shape()));
    }
    auto src = it->second.value.data();
    std::copy(src.begin(), src.end(), p.value.mutable_data().begin());
  }
}

}  // namespace retrosem::nn
