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
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "retrosem/data.hpp"

namespace retrosem::metrics {

/// Lowercases, drops punctuation characters and splits on whitespace.
std::vector<std::string> normalize_answer(std::string_view text);

/// 1 iff the normalized prediction equals a normalized gold; for an impossible
/// question, 1 iff the prediction normalizes to nothing.
int exact_match(std::string_view prediction, const std::vector<std::string>& golds,
                bool is_impossible);

/// Bag-of-tokens F1, maximised over golds. Impossible questions score like EM.
double token_f1(std::string_view prediction, const std::vector<std::string>& golds,
                bool is_impossible);

struct SplitReport {
  std::size_t count = 0;
  double exact_match = 0.0;  // percent
  double f1 = 0.0;           // percent
};

struct EvalReport {
  double exact_match = 0.0;  // percent
  double f1 = 0.0;           // percent
  std::vector<std::string> ids;
  std::vector<int> per_question_em;
  std::vector<double> per_question_f1;
  SplitReport answerable;
  SplitReport unanswerable;
};

using Predictions = std::map<std::string, std::string>;

/// Throws DataError listing the offending ids when predictions are missing or extra.
EvalReport evaluate_predictions(const Predictions& predictions,
                                const std::vector<data::MrcExample>& examples);

nlohmann::json report_json(const EvalReport& report, bool per_question = false);

Predictions read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, const Predictions& predictions);

struct ClassifierReport {
  double accuracy = 0.0;  // percent
  double f1 = 0.0;        // percent, unanswerable as the positive class
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;
};

/// `true` means unanswerable.
ClassifierReport classifier_metrics(const std::vector<bool>& predicted,
                                    const std::vector<bool>& gold);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 0.0;  // two-sided
};

/// Paired Student t-test. Throws InputError for unequal lengths or n < 2 and
/// DegenerateInputError when the differences have zero variance.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// Two-sided tail probability P(|T| >= |t|) for Student's t with `df` degrees.
double student_t_two_sided(double t, double df);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

}  // namespace retrosem::metrics
