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

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "retrosem/nn/gradcheck.hpp"

namespace retrosem {

inline constexpr double kGradTolerance = 1e-4;

struct GradSuiteResult {
  std::string name;
  bool composite = false;
  nn::GradCheckReport report;

  bool passed(double tolerance = kGradTolerance) const { return report.passed(tolerance); }
};

/// Registered check names, kernel ops first, then composites.
std::vector<std::string> grad_suite_names();

/// Runs every registered check whose name contains `filter` once per seed and
/// keeps the worst report per check. Inputs are drawn from the seed; all
/// dimensions stay at or below 8.
std::vector<GradSuiteResult> run_grad_suite(const std::vector<std::uint64_t>& seeds,
                                            const std::string& filter = "");

nlohmann::json grad_suite_json(const std::vector<GradSuiteResult>& results, double tolerance);

}  // namespace retrosem
