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

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include "doctest.h"
#include "retrosem/data.hpp"
#include "retrosem/error.hpp"
#include "retrosem/io.hpp"
#include "retrosem/tokenizer.hpp"
#include "retrosem/utf8.hpp"

using namespace retrosem;
using namespace retrosem::data;
using nlohmann::json;

namespace {

const std::filesystem::path kFixtures = RETROSEM_FIXTURE_DIR;

Vocabulary vocab_for(const std::vector<MrcExample>& examples) {
  std::vector<std::string> docs;
  for (const auto& ex : examples) {
    docs.push_back(ex.question);
    docs.push_back(ex.context);
  }
  return build_vocab(docs, 1, 5000);
}

}  // namespace

TEST_CASE("loading the handcrafted SQuAD-2.0 fixture") {
  std::vector<std::string> warnings;
  const auto examples = load_squad_v2(kFixtures / "squad_small.json", &warnings);
  CHECK(warnings.empty());
  REQUIRE(examples.size() == 5);
  CHECK(std::count_if(examples.begin(), examples.end(),
                      [](const MrcExample& e) { return e.is_impossible; }) == 2);
  CHECK(dataset_stats(examples) == DatasetStats{2, 3, 5, 2});

  const MrcExample& q2 = examples[1];
  CHECK(q2.id == "q2");
  REQUIRE(q2.answers.size() == 1);
  CHECK(utf8::substr(q2.context, q2.answers[0].answer_start, utf8::length(q2.answers[0].text)) ==
        "sông Hồng");
  CHECK(examples[2].plausible_answers.size() == 1);

  auto shuffled = examples;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(dataset_stats(shuffled) == dataset_stats(examples));
  }
  CHECK(dataset_stats({}) == DatasetStats{});
}

TEST_CASE("serialize and parse round trip") {
  const auto examples = load_squad_v2(kFixtures / "squad_small.json");
  const json doc = serialize_squad_v2(examples);
  CHECK(doc == io::read_json(kFixtures / "squad_small.json"));
  const auto again = parse_squad_v2(doc);
  REQUIRE(again.size() == examples.size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    CHECK(again[i].id == examples[i].id);
    CHECK(again[i].context == examples[i].context);
    CHECK(again[i].answers == examples[i].answers);
    CHECK(again[i].article == examples[i].article);
    CHECK(again[i].passage == examples[i].passage);
  }
}

TEST_CASE("offset repair and flagging") {
  std::vector<std::string> warnings;
  const auto examples = load_squad_v2(kFixtures / "squad_offsets.json", &warnings);
  REQUIRE(examples.size() == 3);
  CHECK(examples[0].answers[0].answer_start == 0);
  CHECK(examples[1].answers[0].answer_start == 20);
  CHECK_FALSE(examples[0].flagged);
  CHECK(examples[2].flagged);
  REQUIRE(warnings.size() == 3);
  CHECK(warnings[0].find("repaired to 0") != std::string::npos);
  CHECK(warnings[2].find("flagged") != std::string::npos);
}

TEST_CASE("parse errors carry the JSON path") {
  CHECK(parse_squad_v2(json{{"data", json::array()}}).empty());
  const json bad = json::parse(R"({"data": [{"title": "t", "paragraphs": [
      {"context": "abc", "qas": [{"id": "x", "question": "q", "answers": [{"text": "a"}]}]}]}]})");
  try {
    parse_squad_v2(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()) ==
          "$.data[0].paragraphs[0].qas[0].answers[0]: missing field \"answer_start\"");
  }
  CHECK_THROWS_AS(parse_squad_v2(json::object()), ParseError);
  CHECK_THROWS_AS(parse_squad_v2(json{{"data", {{{"paragraphs", "oops"}}}}}), ParseError);
  CHECK_THROWS_AS(load_squad_v2(kFixtures / "does_not_exist.json"), IoError);
}

TEST_CASE("batching") {
  FixtureConfig fc;
  fc.size = 10;
  const Fixture fx = gen_fixture(fc);
  const Vocabulary vocab = vocab_for(fx.examples);
  const auto batches = make_batches(fx.examples, vocab, {}, 4, 9);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].items.size() == 4);
  CHECK(batches[1].items.size() == 4);
  CHECK(batches[2].items.size() == 2);

  std::multiset<std::size_t> seen;
  for (const auto& b : batches) {
    for (const auto& item : b.items) {
      seen.insert(item.index);
      CHECK(item.pair.length() == b.length);
      const std::size_t real = std::count(item.pair.attention_mask.begin(),
                                          item.pair.attention_mask.end(), true);
      for (std::size_t i = 0; i < item.pair.length(); ++i) {
        CHECK(item.pair.attention_mask[i] == (i < real));
        if (i >= real) CHECK(item.pair.subword_ids[i] == Vocabulary::kPad);
      }
    }
  }
  CHECK(seen.size() == 10);
  CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 10);

  auto order = [](const std::vector<Batch>& bs) {
    std::vector<std::size_t> o;
    for (const auto& b : bs)
      for (const auto& i : b.items) o.push_back(i.index);
    return o;
  };
  CHECK(order(make_batches(fx.examples, vocab, {}, 4, 9)) == order(batches));
  CHECK_THROWS_AS(make_batches(fx.examples, vocab, {}, 0, 9), ConfigError);

  const auto annotated = make_batches(fx.examples, vocab, {}, 4, 9, &fx.annotations, 3);
  for (const auto& b : annotated) {
    for (const auto& item : b.items) {
      REQUIRE(item.frame_slots.size() == 1);
      CHECK(item.frame_slots[0].size() == item.pair.word_count());
    }
  }
  srl::AnnotationMap partial = fx.annotations;
  partial.erase(partial.begin());
  CHECK_THROWS_AS(make_batches(fx.examples, vocab, {}, 4, 9, &partial, 3), DataError);
}

TEST_CASE("synthetic fixture generator") {
  const Fixture fx = gen_fixture({});
  REQUIRE(fx.examples.size() == 64);
  CHECK(dataset_stats(fx.examples).unanswerable == 32);
  CHECK(dataset_stats(fx.examples) == DatasetStats{8, 32, 64, 32});
  for (const auto& ex : fx.examples) {
    const auto q_words = split_words(ex.question);
    const auto c_words = split_words(ex.context);
    const std::string target = q_words.at(1).text;
    const bool present = std::any_of(c_words.begin(), c_words.end(),
                                     [&](const Word& w) { return w.text == target; });
    CHECK(present == !ex.is_impossible);
    if (!ex.is_impossible) {
      REQUIRE(ex.answers.size() == 1);
      CHECK(ex.answers[0].text == target);
      CHECK(utf8::substr(ex.context, ex.answers[0].answer_start, utf8::length(target)) == target);
    }
    const auto& ann = fx.annotations.at(ex.id);
    for (const auto& f : ann.question_frames) CHECK_NOTHROW(srl::validate_frame(f, q_words.size()));
    for (const auto& f : ann.context_frames) CHECK_NOTHROW(srl::validate_frame(f, c_words.size()));
    const auto& labels = ann.context_frames.at(0).labels;
    CHECK((std::find(labels.begin(), labels.end(), "B-ARG1") != labels.end()) == !ex.is_impossible);
  }
  // Same seed, same fixture.
  CHECK(serialize_squad_v2(gen_fixture({}).examples) == serialize_squad_v2(fx.examples));

  FixtureConfig sem;
  sem.semantic_only = true;
  const Fixture sx = gen_fixture(sem);
  for (const auto& ex : sx.examples) {
    const std::string target = split_words(ex.question).at(1).text;
    const auto c_words = split_words(ex.context);
    CHECK(std::any_of(c_words.begin(), c_words.end(),
                      [&](const Word& w) { return w.text == target; }));
  }

  FixtureConfig bad;
  bad.unanswerable_fraction = 1.5;
  CHECK_THROWS_AS(gen_fixture(bad), ConfigError);
  bad = FixtureConfig{};
  bad.vocab_size = 8;
  CHECK_THROWS_AS(gen_fixture(bad), ConfigError);
}
