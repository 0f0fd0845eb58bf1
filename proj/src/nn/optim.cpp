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

#include "retrosem/nn/optim.hpp"

#include <cmath>
#include <vector>

#include "retrosem/error.hpp"

namespace retrosem::nn {

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (gradient_accumulation_steps < 1) {
    throw ConfigError("gradient_accumulation_steps must be >= 1");
  }
}

void adamw_step(ParameterSet& params, const OptimizerConfig& config) {
  config.validate();
  for (auto& [name, p] : params.entries()) {
    Tensor& value = p.value;
    auto theta = value.mutable_data();
    auto grad = value.mutable_grad();
    std::vector<bool> frozen;
    if (!p.frozen_rows.empty()) {
      frozen.assign(theta.size(), false);
      const std::size_t cols = value.cols();
      for (std::size_t row : p.frozen_rows)
        for (std::size_t c = 0; c < cols; ++c) frozen[row * cols + c] = true;
    }

    ++p.step;
    const double t = static_cast<double>(p.step);
    const double bc1 = 1.0 - std::pow(config.beta1, t);
    const double bc2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      if (!frozen.empty() && frozen[i]) continue;
      const double g = grad[i];
      p.first_moment[i] = config.beta1 * p.first_moment[i] + (1.0 - config.beta1) * g;
      p.second_moment[i] = config.beta2 * p.second_moment[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = p.first_moment[i] / bc1;
      const double v_hat = p.second_moment[i] / bc2;
      theta[i] -= config.learning_rate *
                  (m_hat / (std::sqrt(v_hat) + config.epsilon) + config.weight_decay * theta[i]);
    }
  }
}

GradientAccumulator::GradientAccumulator(ParameterSet& params, OptimizerConfig config)
    : params_(params), config_(config) {
  config_.validate();
}

bool GradientAccumulator::micro_step_done() {
  ++pending_;
  if (pending_ < config_.gradient_accumulation_steps) return false;
  step(pending_);
  return true;
}

bool GradientAccumulator::flush() {
  if (pending_ == 0) return false;
  step(pending_);
  return true;
}

void GradientAccumulator::step(std::size_t micro_batches) {
  const double inv = 1.0 / static_cast<double>(micro_batches);
  for (auto& [name, p] : params_.entries()) {
    for (double& g : p.value.mutable_grad()) g *= inv;
  }
  adamw_step(params_, config_);
  params_.zero_grad();
  pending_ = 0;
  ++steps_;
}

}  // namespace retrosem::nn
