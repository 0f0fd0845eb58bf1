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
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "retrosem/nn/tensor.hpp"

namespace retrosem::nn {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_input;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;

  bool passed(double tolerance) const { return max_relative_error <= tolerance; }
  /// Keeps whichever report has the larger error; sums coordinate counts.
  void merge(const GradCheckReport& other);
};

/// |analytic - numeric| / max(|numeric|, 1e-3). Relative where the gradient is
/// not tiny, absolute below the floor.
double relative_error(double analytic, double numeric);

using NamedTensor = std::pair<std::string, Tensor>;

/// Compares the tape gradient of the scalar `loss_fn()` against central
/// differences with step `h` for every coordinate of every input.
/// Throws NumericDomainError naming the op that produced a non-finite value.
GradCheckReport grad_check(const std::function<Tensor()>& loss_fn,
                           const std::vector<NamedTensor>& inputs, double h = 1e-5);

/// Draws uniform(-1, 1) inputs of the given shapes for each seed and reports
/// the worst error over all seeds.
GradCheckReport grad_check_random(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                                  const std::vector<Shape>& shapes,
                                  const std::vector<std::uint64_t>& seeds, double h = 1e-5);

}  // namespace retrosem::nn
