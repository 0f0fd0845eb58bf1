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

#include "retrosem/metrics.hpp"

#include <cmath>
#include <set>

#include "retrosem/error.hpp"
#include "retrosem/io.hpp"
#include "retrosem/utf8.hpp"

namespace retrosem::metrics {

using nlohmann::json;

std::vector<std::string> normalize_answer(std::string_view text) {
  std::vector<std::string> tokens;
  std::u32string current;
  for (char32_t c : utf8::decode(text)) {
    if (utf8::is_punct(c)) continue;
    if (utf8::is_space(c)) {
      if (!current.empty()) tokens.push_back(utf8::encode(current));
      current.clear();
      continue;
    }
    current.push_back(utf8::to_lower(c));
  }
  if (!current.empty()) tokens.push_back(utf8::encode(current));
  return tokens;
}

int exact_match(std::string_view prediction, const std::vector<std::string>& golds,
                bool is_impossible) {
  const auto pred = normalize_answer(prediction);
  if (is_impossible) return pred.empty() ? 1 : 0;
  for (const auto& g : golds) {
    if (normalize_answer(g) == pred) return 1;
  }
  return 0;
}

namespace {

double bag_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() || gold.empty()) return pred.empty() && gold.empty() ? 1.0 : 0.0;
  std::multiset<std::string> remaining(gold.begin(), gold.end());
  std::size_t matched = 0;
  for (const auto& t : pred) {
    auto it = remaining.find(t);
    if (it != remaining.end()) {
      remaining.erase(it);
      ++matched;
    }
  }
  if (matched == 0) return 0.0;
  const double precision = static_cast<double>(matched) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(matched) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double token_f1(std::string_view prediction, const std::vector<std::string>& golds,
                bool is_impossible) {
  const auto pred = normalize_answer(prediction);
  if (is_impossible) return pred.empty() ? 1.0 : 0.0;
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, bag_f1(pred, normalize_answer(g)));
  return best;
}

EvalReport evaluate_predictions(const Predictions& predictions,
                                const std::vector<data::MrcExample>& examples) {
  std::vector<std::string> missing, extra;
  std::set<std::string> ids;
  for (const auto& ex : examples) {
    ids.insert(ex.id);
    if (!predictions.count(ex.id)) missing.push_back(ex.id);
  }
  for (const auto& [id, text] : predictions) {
    if (!ids.count(id)) extra.push_back(id);
  }
  if (!missing.empty() || !extra.empty()) {
    auto list = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& id : v) s += (s.empty() ? "" : ", ") + id;
      return s;
    };
    std::string msg = "predictions do not match the dataset:";
    if (!missing.empty()) msg += " missing ids [" + list(missing) + "]";
    if (!extra.empty()) msg += " extra ids [" + list(extra) + "]";
    throw DataError(msg);
  }

  EvalReport r;
  double em_sum = 0.0, f1_sum = 0.0;
  for (const auto& ex : examples) {
    std::vector<std::string> golds;
    for (const auto& a : ex.answers) golds.push_back(a.text);
    const std::string& pred = predictions.at(ex.id);
    const int em = exact_match(pred, golds, ex.is_impossible);
    const double f1 = token_f1(pred, golds, ex.is_impossible);
    r.ids.push_back(ex.id);
    r.per_question_em.push_back(em);
    r.per_question_f1.push_back(f1);
    em_sum += em;
    f1_sum += f1;
    SplitReport& split = ex.is_impossible ? r.unanswerable : r.answerable;
    ++split.count;
    split.exact_match += em;
    split.f1 += f1;
  }
  const auto n = static_cast<double>(examples.size());
  if (n > 0) {
    r.exact_match = 100.0 * em_sum / n;
    r.f1 = 100.0 * f1_sum / n;
  }
  for (SplitReport* s : {&r.answerable, &r.unanswerable}) {
    if (s->count > 0) {
      s->exact_match = 100.0 * s->exact_match / static_cast<double>(s->count);
      s->f1 = 100.0 * s->f1 / static_cast<double>(s->count);
    }
  }
  return r;
}

json report_json(const EvalReport& report, bool per_question) {
  auto split = [](const SplitReport& s) {
    return json{{"count", s.count}, {"exact_match", s.exact_match}, {"f1", s.f1}};
  };
  json j = {{"exact_match", report.exact_match},
            {"f1", report.f1},
            {"total", report.ids.size()},
            {"answerable", split(report.answerable)},
            {"unanswerable", split(report.unanswerable)}};
  if (per_question) {
    json rows = json::object();
    for (std::size_t i = 0; i < report.ids.size(); ++i) {
      rows[report.ids[i]] = {{"exact_match", report.per_question_em[i]},
                             {"f1", report.per_question_f1[i]}};
    }
    j["per_question"] = rows;
  }
  return j;
}

Predictions read_predictions(const std::filesystem::path& path) {
  const json j = io::read_json(path);
  if (!j.is_object()) throw ParseError(path.string() + ": predictions must be a JSON object");
  Predictions out;
  for (const auto& [id, value] : j.items()) {
    if (!value.is_string()) {
      throw ParseError(path.string() + ": $." + id + ": expected string, got " + value.type_name());
    }
    out[id] = value.get<std::string>();
  }
  return out;
}

void write_predictions(const std::filesystem::path& path, const Predictions& predictions) {
  io::write_json(path, json(predictions));
}

ClassifierReport classifier_metrics(const std::vector<bool>& predicted,
                                    const std::vector<bool>& gold) {
  if (predicted.size() != gold.size()) {
    throw InputError("classifier_metrics: " + std::to_string(predicted.size()) +
                     " predictions for " + std::to_string(gold.size()) + " gold labels");
  }
  ClassifierReport r;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] && gold[i]) ++r.true_positive;
    else if (predicted[i]) ++r.false_positive;
    else if (gold[i]) ++r.false_negative;
    else ++r.true_negative;
  }
  if (!gold.empty()) {
    r.accuracy = 100.0 * static_cast<double>(r.true_positive + r.true_negative) /
                 static_cast<double>(gold.size());
  }
  const std::size_t denom = 2 * r.true_positive + r.false_positive + r.false_negative;
  r.f1 = denom == 0 ? 0.0 : 100.0 * 2.0 * static_cast<double>(r.true_positive) / static_cast<double>(denom);
  return r;
}

namespace {

// Continued fraction for I_x(a, b) by the modified Lentz method.
double beta_continued_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-15;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 1000; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) return h;
  }
  throw NumericDomainError("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw NumericDomainError("incomplete_beta: a and b must be > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw NumericDomainError("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (!std::isfinite(t) || !(df > 0.0)) {
    throw NumericDomainError("student_t_two_sided: needs finite t and df > 0");
  }
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw InputError("paired_t_test: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + " scores");
  }
  const std::size_t n = a.size();
  if (n < 2) throw InputError("paired_t_test: needs at least 2 pairs");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += (a[i] - b[i]) / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  const double var = ss / static_cast<double>(n - 1);
  if (!(var > 0.0)) {
    throw DegenerateInputError("paired_t_test: differences have zero variance");
  }
  TTestResult r;
  r.df = static_cast<double>(n - 1);
  r.t = mean / std::sqrt(var / static_cast<double>(n));
  r.p = student_t_two_sided(r.t, r.df);
  return r;
}

}  // namespace retrosem::metrics
