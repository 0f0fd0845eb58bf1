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
#include <limits>
#include <random>
#include <set>

#include "doctest.h"
#include "retrosem/error.hpp"
#include "retrosem/nn/gradcheck.hpp"
#include "retrosem/nn/ops.hpp"
#include "retrosem/reader.hpp"

using namespace retrosem;
using namespace retrosem::reader;
using nn::Tensor;

namespace {

EncoderConfig toy_encoder(std::size_t vocab_size) {
  EncoderConfig c;
  c.layers = 1;
  c.heads = 2;
  c.model_dim = 8;
  c.ff_dim = 16;
  c.max_position = 64;
  c.vocab_size = vocab_size;
  return c;
}

SemanticConfig toy_semantic() {
  SemanticConfig s;
  s.label_embedding_dim = 4;
  s.gru_hidden = 3;
  s.m_max = 2;
  s.fused_dim = 4;
  return s;
}

Vocabulary vocab_for(const std::vector<data::MrcExample>& examples) {
  std::vector<std::string> docs;
  for (const auto& ex : examples) {
    docs.push_back(ex.question);
    docs.push_back(ex.context);
  }
  return build_vocab(docs, 1, 5000);
}

data::Fixture small_fixture(std::size_t size, std::uint64_t seed = 3) {
  data::FixtureConfig fc;
  fc.size = size;
  fc.seed = seed;
  fc.context_words = 4;
  fc.vocab_size = 12;
  return data::gen_fixture(fc);
}

std::pair<std::size_t, std::size_t> oracle_span(const std::vector<double>& s,
                                                const std::vector<double>& e,
                                                const std::vector<bool>& valid, std::size_t max_len) {
  double best = -std::numeric_limits<double>::infinity();
  std::pair<std::size_t, std::size_t> arg{0, 0};
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (valid[i] && valid[j] && i <= j && j - i < max_len) all.emplace_back(i, j);
  for (const auto& [i, j] : all) {
    const double v = s[i] + e[j];
    if (v > best || (v == best && std::make_pair(i, j) < arg)) {
      best = v;
      arg = {i, j};
    }
  }
  return arg;
}

std::vector<double> snapshot(const nn::ParameterSet& p) {
  std::vector<double> out;
  for (const auto& t : p.tensors()) out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

}  // namespace

TEST_CASE("reader training defaults") {
  const auto s = ReaderTrainConfig::sketchy_defaults();
  CHECK(s.learning_rate == 5e-6);
  CHECK(s.batch_size == 64);
  CHECK(s.gradient_accumulation_steps == 8);
  const auto i = ReaderTrainConfig::intensive_defaults();
  CHECK(i.learning_rate == 2e-5);
  CHECK(i.batch_size == 64);
  CHECK(i.kind == "intensive");
  ReaderTrainConfig bad;
  bad.kind = "other";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("sketchy score algebra") {
  CHECK(SketchyOutput{0.7, 0.7}.score_ext() == 0.0);
  CHECK(SketchyOutput{1.0, 3.5}.score_ext() == doctest::Approx(2.5));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 100; ++i) {
    const double a = u(rng), b = u(rng);
    CHECK(SketchyOutput{a, b}.score_ext() == -SketchyOutput{b, a}.score_ext());
  }
}

TEST_CASE("sketchy head degenerate case and annotation requirement") {
  const auto fx = small_fixture(4);
  const Vocabulary vocab = vocab_for(fx.examples);
  SketchyReader model(toy_encoder(vocab.size()), toy_semantic(), srl::LabelInventory(), true, 5);
  for (const char* name : {"sketchy.head.weight", "sketchy.head.bias"}) {
    auto d = model.params().get(name).mutable_data();
    std::fill(d.begin(), d.end(), 0.0);
  }
  for (std::size_t i = 0; i < fx.examples.size(); ++i) {
    const auto item = data::encode_example(fx.examples[i], i, vocab, {}, &fx.annotations, 2);
    const auto out = model.forward(item);
    CHECK(out.logit_answerable == 0.0);
    CHECK(out.logit_unanswerable == 0.0);
  }
  const auto bare = data::encode_example(fx.examples[0], 0, vocab, {}, nullptr, 2);
  CHECK_THROWS_AS(model.forward(bare), DataError);
  CHECK_THROWS_AS(train_sketchy(model, fx.examples, nullptr, vocab, {}, {}, 1), DataError);
  srl::AnnotationMap partial = fx.annotations;
  partial.erase(fx.examples[2].id);
  CHECK_THROWS_AS(run_sketchy(model, fx.examples, &partial, vocab, {}), DataError);
}

TEST_CASE("best span examples and oracle agreement") {
  const std::vector<double> s = {0, 1, 3, 2}, e = {0, 0, 1, 5};
  const std::vector<bool> ctx = {false, true, true, true};
  CHECK(best_span(s, e, ctx, 30) == std::make_pair<std::size_t, std::size_t>(2, 3));
  CHECK(best_span(s, e, {false, false, true, false}, 30) ==
        std::make_pair<std::size_t, std::size_t>(2, 2));
  const auto one = best_span(s, e, ctx, 1);
  CHECK(one.first == one.second);
  CHECK_THROWS_AS(best_span(s, e, {false, false, false, false}, 3), ContractError);
  CHECK(best_span({0, 0, 0}, {0, 0, 0}, {false, true, true}, 5) ==
        std::make_pair<std::size_t, std::size_t>(1, 1));

  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> small(-3, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<double> a(n), b(n);
    std::vector<bool> valid(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = small(rng);  // integers provoke ties
      b[i] = small(rng);
      valid[i] = rng() % 4 != 0;
      any = any || valid[i];
    }
    if (!any) valid[rng() % n] = true;
    const std::size_t max_len = 1 + rng() % 5;
    CHECK(best_span(a, b, valid, max_len) == oracle_span(a, b, valid, max_len));
  }
}

TEST_CASE("intensive scores exclude question and special positions") {
  const Vocabulary vocab = build_vocab({"q a b c"}, 1, 100);
  const TokenizedPair pair = encode_pair("q", "a b c", vocab, {});
  REQUIRE(pair.length() == 7);  // [CLS] q [SEP] a b c [SEP]
  const double big = 100.0;
  const IntensiveOutput out = score_spans({0, big, big, 1, 3, 2, big}, {0, big, big, 0, 1, 5, big},
                                          pair, 30);
  CHECK(out.span == std::make_pair<std::size_t, std::size_t>(4, 5));
  CHECK(out.score_has == 8.0);
  CHECK(out.score_null == 0.0);
  CHECK(out.score_diff == -8.0);

  const IntensiveOutput zero = score_spans(std::vector<double>(7, 0.0), std::vector<double>(7, 0.0),
                                           pair, 30);
  CHECK(zero.score_diff == 0.0);
  CHECK(zero.span == std::make_pair<std::size_t, std::size_t>(3, 3));
}

TEST_CASE("answer span targets and text recovery") {
  const auto fx = small_fixture(12);
  const Vocabulary vocab = vocab_for(fx.examples);
  for (const auto& ex : fx.examples) {
    const TokenizedPair pair = encode_pair(ex.question, ex.context, vocab, {});
    const auto target = span_targets(ex, pair);
    if (ex.is_impossible) {
      CHECK(target == std::make_pair<std::size_t, std::size_t>(0, 0));
    } else {
      CHECK(target.first > pair.context_word_offset);
      CHECK(span_text(ex, pair, target) == ex.answers[0].text);
    }
  }
  data::MrcExample ex;
  ex.context = "Sông Hương chảy qua thành phố Huế.";
  ex.question = "Sông nào?";
  ex.answers = {{"thành phố Huế", 20}};
  const Vocabulary v2 = build_vocab({ex.context, ex.question}, 1, 500);
  const TokenizedPair pair = encode_pair(ex.question, ex.context, v2, {});
  CHECK(span_text(ex, pair, span_targets(ex, pair)) == "thành phố Huế");

  PairLimits tight;
  tight.max_seq_length = 10;
  const TokenizedPair cut = encode_pair(ex.question, ex.context, v2, tight);
  REQUIRE(cut.context_truncated());
  CHECK(span_targets(ex, cut) == std::make_pair<std::size_t, std::size_t>(0, 0));
}

TEST_CASE("rear verification") {
  CHECK(rear_verify(2, -1, {1, 1, 0}).unanswerable);
  CHECK(rear_verify(2, -1, {1, 1, 0}).v == 1.0);
  const Decision d = rear_verify(-4, 2, {0.5, 0.5, 0});
  CHECK(d.v == -1.0);
  CHECK_FALSE(d.unanswerable);
  for (double diff : {-5.0, 0.0, 5.0}) {
    CHECK(rear_verify(diff, 1.0, {0, 1, 0}).unanswerable);
    CHECK_FALSE(rear_verify(diff, -1.0, {0, 1, 0}).unanswerable);
  }
  CHECK_THROWS_AS(rear_verify(std::nan(""), 0, {}), NumericDomainError);
  CHECK_THROWS_AS(rear_verify(0, std::numeric_limits<double>::infinity(), {}), NumericDomainError);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-10, 10), beta(0, 1), inc(0, 5);
  for (int i = 0; i < 1000; ++i) {
    const VerifierParams p{beta(rng), beta(rng), u(rng)};
    const double sd = u(rng), se = u(rng);
    if (rear_verify(sd, se, p).unanswerable) {
      CHECK(rear_verify(sd + inc(rng), se, p).unanswerable);
      CHECK(rear_verify(sd, se + inc(rng), p).unanswerable);
    }
  }

  const ScoredQuestion q{"x", 3.0, -1.0, "Huế"};
  const Verdict yes = make_verdict(q, {1, 1, 0});
  CHECK(yes.answer_text.empty());
  CHECK(yes.v > yes.params.delta);
  const Verdict no = make_verdict(q, {1, 1, 5});
  CHECK(no.answer_text == "Huế");
}

TEST_CASE("verifier tuning") {
  // Unanswerable items carry score_ext 2, answerable ones -2: delta in [-2, 2) separates.
  std::vector<data::MrcExample> gold;
  std::vector<ScoredQuestion> scored;
  for (int i = 0; i < 8; ++i) {
    data::MrcExample ex;
    ex.id = "d" + std::to_string(i);
    ex.is_impossible = i % 2 == 1;
    if (!ex.is_impossible) ex.answers = {{"nhà", 0}};
    gold.push_back(ex);
    scored.push_back({ex.id, 0.3 * i - 1.0, ex.is_impossible ? 2.0 : -2.0, "nhà"});
  }
  VerifierGrid one;
  one.beta1 = {0.5};
  one.beta2 = {0.25};
  one.delta = {1.5};
  const TuneResult single = tune_verifier(scored, gold, one);
  CHECK(single.params == VerifierParams{0.5, 0.25, 1.5});
  CHECK(single.evaluated == 1);

  VerifierGrid sep;
  sep.beta1 = {0.0};
  sep.beta2 = {1.0};
  sep.delta = {-3, -1, 0.5, 3};
  const TuneResult r = tune_verifier(scored, gold, sep);
  CHECK(r.f1 == 100.0);
  CHECK(r.params.delta == -1.0);  // smallest perfect delta

  const VerifierGrid grid;
  const TuneResult full = tune_verifier(scored, gold, grid);
  CHECK(full.evaluated == 5 * 5 * 33);
  double best_f1 = -1.0;
  for (double b1 : grid.beta1)
    for (double b2 : grid.beta2)
      for (double d : grid.delta) {
        const auto rep = metrics::evaluate_predictions(apply_verifier(scored, {b1, b2, d}), gold);
        best_f1 = std::max(best_f1, rep.f1);
      }
  CHECK(full.f1 == best_f1);
  const auto again = metrics::evaluate_predictions(apply_verifier(scored, full.params), gold);
  CHECK(again.f1 == full.f1);
  CHECK(again.exact_match == full.exact_match);

  VerifierGrid empty;
  empty.delta.clear();
  CHECK_THROWS_AS(tune_verifier(scored, gold, empty), ConfigError);
}

TEST_CASE("training runs: null training and single-example overfit") {
  const auto fx = small_fixture(4);
  const Vocabulary vocab = vocab_for(fx.examples);

  ReaderTrainConfig none = ReaderTrainConfig::intensive_defaults();
  none.epochs = 0;
  IntensiveReader intensive(toy_encoder(vocab.size()), 9);
  const auto before = snapshot(intensive.params());
  const auto r0 = train_intensive(intensive, fx.examples, vocab, {}, none, 1);
  CHECK(r0.steps == 0);
  CHECK(snapshot(intensive.params()) == before);

  ReaderTrainConfig toy;
  toy.kind = "intensive";
  toy.learning_rate = 1e-2;
  toy.batch_size = 1;
  toy.gradient_accumulation_steps = 1;
  toy.weight_decay = 0.0;
  toy.epochs = 50;
  const std::vector<data::MrcExample> one = {fx.examples[0]};
  const auto curve = train_intensive(intensive, one, vocab, {}, toy, 1);
  REQUIRE(curve.losses.size() == 50);
  CHECK(curve.steps == 50);
  for (std::size_t i = 1; i < curve.losses.size(); ++i) {
    CHECK(curve.losses[i] <= curve.losses[i - 1] + 1e-12);
  }

  SketchyReader sketchy(toy_encoder(vocab.size()), toy_semantic(), srl::LabelInventory(), true, 4);
  toy.kind = "sketchy";
  const auto sk = train_sketchy(sketchy, one, &fx.annotations, vocab, {}, toy, 1);
  for (std::size_t i = 1; i < sk.losses.size(); ++i) {
    CHECK(sk.losses[i] <= sk.losses[i - 1] + 1e-12);
  }

  ReaderTrainConfig capped = toy;
  capped.max_steps = 7;
  CHECK(train_sketchy(sketchy, fx.examples, &fx.annotations, vocab, {}, capped, 2).steps == 7);

  ReaderTrainConfig accum = toy;
  accum.epochs = 1;
  accum.batch_size = 1;
  accum.gradient_accumulation_steps = 3;
  const auto a = train_sketchy(sketchy, fx.examples, &fx.annotations, vocab, {}, accum, 2);
  CHECK(a.losses.size() == 4);
  CHECK(a.steps == 2);  // one full window of 3 and a flushed remainder
}

TEST_CASE("reader heads pass the gradient check") {
  const auto fx = small_fixture(4);
  const Vocabulary vocab = vocab_for(fx.examples);
  SketchyReader sketchy(toy_encoder(vocab.size()), toy_semantic(), srl::LabelInventory(), true, 6);
  IntensiveReader intensive(toy_encoder(vocab.size()), 7);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& ex = fx.examples[k];
    const auto item = data::encode_example(ex, k, vocab, {}, &fx.annotations, 2);
    std::vector<nn::NamedTensor> inputs;
    for (const auto& n : sketchy.params().names()) {
      if (n.find("head") != std::string::npos || n.find("fusion") != std::string::npos) {
        inputs.push_back({n, sketchy.params().get(n)});
      }
    }
    const auto r1 = nn::grad_check([&] { return sketchy.loss(item, ex.is_impossible); }, inputs);
    CHECK(r1.max_relative_error <= 1e-4);

    std::vector<nn::NamedTensor> span_inputs = {
        {"w", intensive.params().get("intensive.span_head.weight")},
        {"b", intensive.params().get("intensive.span_head.bias")}};
    const auto target = span_targets(ex, item.pair);
    const auto r2 = nn::grad_check([&] { return intensive.loss(item.pair, target); }, span_inputs);
    CHECK(r2.max_relative_error <= 1e-4);
  }
}

TEST_CASE("prediction totality, forced verdicts and persistence") {
  const auto fx = small_fixture(6);
  const Vocabulary vocab = vocab_for(fx.examples);
  SketchyReader sketchy(toy_encoder(vocab.size()), toy_semantic(), srl::LabelInventory(), true, 1);
  IntensiveReader intensive(toy_encoder(vocab.size()), 2);
  const auto scored = score_questions(sketchy, intensive, fx.examples, &fx.annotations, vocab, {}, 30);
  const auto verdicts = predict(scored, {1, 1, 0});
  REQUIRE(verdicts.size() == fx.examples.size());
  std::set<std::string> ids;
  for (const auto& v : verdicts) {
    ids.insert(v.id);
    CHECK(v.answer_text.empty() == (v.v > v.params.delta));
  }
  CHECK(ids.size() == fx.examples.size());

  for (const auto& v : predict(scored, {0, 0, -1})) CHECK(v.answer_text.empty());
  auto dup = scored;
  dup.push_back(dup.front());
  CHECK_THROWS_AS(predict(dup, {}), DataError);

  const auto dir = std::filesystem::temp_directory_path() / "retrosem_reader_test";
  std::filesystem::create_directories(dir);
  sketchy.save(dir / "s.ckpt");
  intensive.save(dir / "i.ckpt");
  const auto s2 = SketchyReader::load(dir / "s.ckpt");
  const auto i2 = IntensiveReader::load(dir / "i.ckpt");
  const auto again = score_questions(*s2, *i2, fx.examples, &fx.annotations, vocab, {}, 30);
  for (std::size_t k = 0; k < scored.size(); ++k) {
    CHECK(again[k].score_diff == scored[k].score_diff);
    CHECK(again[k].score_ext == scored[k].score_ext);
    CHECK(again[k].span_text == scored[k].span_text);
  }
  CHECK_THROWS_AS(IntensiveReader::load(dir / "s.ckpt"), DataError);
}
