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

#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "doctest.h"
#include "retrosem/error.hpp"
#include "retrosem/io.hpp"
#include "retrosem/metrics.hpp"

using namespace retrosem;
using namespace retrosem::metrics;

namespace {

const std::filesystem::path kFixtures = RETROSEM_FIXTURE_DIR;

double fraction(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) return std::stod(s);
  return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

// Two-sided p for Student t by Simpson integration of the density over [0, |t|].
double t_tail_oracle(double t, double df) {
  const double c = std::tgamma((df + 1.0) / 2.0) / (std::sqrt(df * M_PI) * std::tgamma(df / 2.0));
  auto f = [&](double x) { return c * std::pow(1.0 + x * x / df, -(df + 1.0) / 2.0); };
  const int n = 20000;
  const double h = std::fabs(t) / n;
  double s = f(0.0) + f(std::fabs(t));
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return 1.0 - 2.0 * s * h / 3.0;
}

}  // namespace

TEST_CASE("answer normalisation") {
  CHECK(normalize_answer("Hà Nội.") == std::vector<std::string>{"hà", "nội"});
  CHECK(normalize_answer("  a   b ") == std::vector<std::string>{"a", "b"});
  CHECK(normalize_answer("").empty());
  CHECK(normalize_answer("ĐÀ NẴNG") == std::vector<std::string>{"đà", "nẵng"});
}

TEST_CASE("hand-scored EM and F1 cases") {
  const auto cases = io::read_json(kFixtures / "metric_cases.json");
  CHECK(cases.size() >= 20);
  for (const auto& c : cases) {
    const auto pred = c["prediction"].get<std::string>();
    const auto golds = c["golds"].get<std::vector<std::string>>();
    const bool impossible = c["is_impossible"].get<bool>();
    INFO("prediction '" << pred << "'");
    CHECK(exact_match(pred, golds, impossible) == c["em"].get<int>());
    CHECK(token_f1(pred, golds, impossible) == doctest::Approx(fraction(c["f1"])).epsilon(1e-12));
  }
}

TEST_CASE("token F1 matches a bag-intersection oracle") {
  std::mt19937_64 rng(77);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d", "đ", "ê"};
  for (int trial = 0; trial < 200; ++trial) {
    auto draw = [&] {
      std::vector<std::string> toks(rng() % 6);
      for (auto& t : toks) t = alphabet[rng() % alphabet.size()];
      return toks;
    };
    const auto p = draw(), g = draw();
    std::string ps, gs;
    for (const auto& t : p) ps += t + " ";
    for (const auto& t : g) gs += t + " ";
    std::map<std::string, int> pc, gc;
    for (const auto& t : p) ++pc[t];
    for (const auto& t : g) ++gc[t];
    int matched = 0;
    for (const auto& [t, n] : pc) matched += std::min(n, gc.count(t) ? gc[t] : 0);
    double expected;
    if (p.empty() || g.empty()) {
      expected = p.empty() && g.empty() ? 1.0 : 0.0;
    } else if (matched == 0) {
      expected = 0.0;
    } else {
      const double prec = static_cast<double>(matched) / static_cast<double>(p.size());
      const double rec = static_cast<double>(matched) / static_cast<double>(g.size());
      expected = 2.0 * prec * rec / (prec + rec);
    }
    CHECK(token_f1(ps, {gs}, false) == expected);
    const double f = token_f1(ps, {gs}, false);
    CHECK((f == 1.0) == (p.size() == g.size() && pc == gc));
  }
}

TEST_CASE("evaluation report on the 6-question fixture") {
  const auto examples = data::load_squad_v2(kFixtures / "report_dataset.json");
  const auto preds = read_predictions(kFixtures / "report_predictions.json");
  const EvalReport r = evaluate_predictions(preds, examples);
  CHECK(r.exact_match == doctest::Approx(100.0 * 2.0 / 6.0));
  CHECK(r.f1 == doctest::Approx(100.0 * (1.0 + 0.8 + 0.0 + 1.0 + 0.0 + 2.0 / 3.0) / 6.0));
  CHECK(r.answerable.count == 4);
  CHECK(r.answerable.exact_match == doctest::Approx(25.0));
  CHECK(r.answerable.f1 == doctest::Approx(100.0 * (1.0 + 0.8 + 0.0 + 2.0 / 3.0) / 4.0));
  CHECK(r.unanswerable.count == 2);
  CHECK(r.unanswerable.exact_match == doctest::Approx(50.0));
  CHECK(r.unanswerable.f1 == doctest::Approx(50.0));

  Predictions gold;
  for (const auto& ex : examples) gold[ex.id] = ex.answers.empty() ? "" : ex.answers[0].text;
  const EvalReport perfect = evaluate_predictions(gold, examples);
  CHECK(perfect.exact_match == 100.0);
  CHECK(perfect.f1 == 100.0);

  std::vector<data::MrcExample> impossible;
  Predictions wrong;
  for (const auto& ex : examples) {
    if (!ex.is_impossible) continue;
    impossible.push_back(ex);
    wrong[ex.id] = "một câu trả lời";
  }
  const EvalReport zero = evaluate_predictions(wrong, impossible);
  CHECK(zero.exact_match == 0.0);
  CHECK(zero.f1 == 0.0);

  Predictions missing = preds;
  missing.erase("r3");
  missing["zz"] = "x";
  try {
    evaluate_predictions(missing, examples);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("missing ids [r3]") != std::string::npos);
    CHECK(msg.find("extra ids [zz]") != std::string::npos);
  }
}

TEST_CASE("classifier metrics") {
  const std::vector<bool> gold = {true, false, true, false};
  const auto perfect = classifier_metrics(gold, gold);
  CHECK(perfect.accuracy == 100.0);
  CHECK(perfect.f1 == 100.0);
  const auto none = classifier_metrics({false, false, false, false}, gold);
  CHECK(none.accuracy == 50.0);
  CHECK(none.f1 == 0.0);
  CHECK_THROWS_AS(classifier_metrics({true}, gold), InputError);

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<bool> p(12), g(12), flipped(12);
    for (std::size_t i = 0; i < 12; ++i) {
      p[i] = rng() & 1;
      g[i] = rng() & 1;
      flipped[i] = !p[i];
    }
    const auto a = classifier_metrics(p, g);
    const auto b = classifier_metrics(flipped, g);
    CHECK(a.true_positive == b.false_negative);
    CHECK(a.false_positive == b.true_negative);
    CHECK(a.accuracy + b.accuracy == doctest::Approx(100.0));
  }
}

TEST_CASE("paired t-test") {
  const TTestResult r = paired_t_test({1, 2, 3}, {0, 0, 0});
  CHECK(r.t == doctest::Approx(2.0 / (1.0 / std::sqrt(3.0))).epsilon(1e-12));
  CHECK(r.df == 2.0);
  CHECK(std::fabs(r.p - t_tail_oracle(r.t, 2.0)) < 1e-6);
  CHECK(r.p == doctest::Approx(0.0742).epsilon(1e-3));

  const TTestResult s = paired_t_test({0, 0, 0}, {1, 2, 3});
  CHECK(s.t == -r.t);
  CHECK(s.p == r.p);

  CHECK_THROWS_AS(paired_t_test({1, 2}, {1, 2}), DegenerateInputError);
  CHECK_THROWS_AS(paired_t_test({1}, {2}), InputError);
  CHECK_THROWS_AS(paired_t_test({1, 2}, {2}), InputError);

  for (double df : {1.0, 3.0, 10.0, 40.0}) {
    double prev = 1.0;
    for (double t = 0.0; t < 8.0; t += 0.25) {
      const double p = student_t_two_sided(t, df);
      CHECK(p <= prev);
      prev = p;
      if (t > 0.0 && t < 4.0 && df >= 3.0) CHECK(std::fabs(p - t_tail_oracle(t, df)) < 1e-6);
    }
  }
  CHECK(incomplete_beta(2.0, 3.0, 0.4) == doctest::Approx(0.5248).epsilon(1e-12));
}
