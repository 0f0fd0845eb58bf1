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

#include "retrosem/nn/params.hpp"

namespace retrosem::nn {

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  std::size_t gradient_accumulation_steps = 1;

  /// Throws ConfigError when a field is out of bounds.
  void validate() const;
};

/// One AdamW update with decoupled weight decay and bias-corrected moments:
///   theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)
/// Gradients must already be averaged over accumulation micro-batches.
void adamw_step(ParameterSet& params, const OptimizerConfig& config);

/// Sums gradients over micro-batches and steps once every
/// `gradient_accumulation_steps` calls to `micro_step_done`.
class GradientAccumulator {
 public:
  GradientAccumulator(ParameterSet& params, OptimizerConfig config);

  /// Call after each micro-batch backward. Returns true when a step was taken.
  bool micro_step_done();
  /// Steps on a partial accumulation window, if any micro-batches are pending.
  bool flush();
  std::size_t steps_taken() const { return steps_; }

 private:
  void step(std::size_t micro_batches);

  ParameterSet& params_;
  OptimizerConfig config_;
  std::size_t pending_ = 0;
  std::size_t steps_ = 0;
};

}  // namespace retrosem::nn
