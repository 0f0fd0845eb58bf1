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

#include <chrono>
#include <set>

#include "doctest.h"
#include "retrosem/gradsuite.hpp"

using namespace retrosem;

TEST_CASE("registered gradient checks cover ops and composites") {
  const auto names = grad_suite_names();
  const std::set<std::string> have(names.begin(), names.end());
  CHECK(have.size() == names.size());
  for (const char* n : {"matmul", "softmax", "layer_norm", "embedding", "conv1d", "span_max",
                        "cross_entropy", "encoder_block", "bigru", "semantic_fusion",
                        "sketchy_head", "intensive_head"}) {
    CHECK(have.count(n) == 1);
  }
}

TEST_CASE("every registered check passes on five seeds") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = run_grad_suite({1, 2, 3, 4, 5});
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(results.size() == grad_suite_names().size());
  for (const auto& r : results) {
    INFO(r.name << " worst " << r.report.worst_input << "[" << r.report.worst_index << "] = "
                << r.report.max_relative_error);
    CHECK(r.passed());
    CHECK(r.report.coordinates > 0);
  }
  CHECK(secs < 60.0);
  CHECK(grad_suite_json(results, kGradTolerance)["passed"] == true);
  CHECK(run_grad_suite({1}, "bigru").size() == 1);
}
