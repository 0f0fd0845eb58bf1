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

#include "retrosem/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>

#include "retrosem/error.hpp"
#include "retrosem/io.hpp"
#include "retrosem/utf8.hpp"

namespace retrosem::data {

using nlohmann::json;

namespace {

const json& field(const json& obj, const char* key, json::value_t type, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + ": missing field \"" + key + "\"");
  const bool ok = it->type() == type ||
                  (type == json::value_t::number_unsigned && it->is_number_integer() &&
                   it->get<long long>() >= 0);
  if (!ok) {
    throw ParseError(path + "." + key + ": expected " + json(type).type_name() + ", got " +
                     it->type_name());
  }
  return *it;
}

std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

// Start of the occurrence of `needle` in `hay` closest to `hint`, if any.
std::optional<std::size_t> nearest_occurrence(const std::u32string& hay,
                                              const std::u32string& needle, std::size_t hint) {
  std::optional<std::size_t> best;
  if (needle.empty()) return best;
  for (std::size_t pos = hay.find(needle); pos != std::u32string::npos;
       pos = hay.find(needle, pos + 1)) {
    const auto dist = [&](std::size_t p) { return p > hint ? p - hint : hint - p; };
    if (!best || dist(pos) < dist(*best)) best = pos;
  }
  return best;
}

}  // namespace

std::vector<MrcExample> parse_squad_v2(const json& document, std::vector<std::string>* warnings) {
  auto warn = [&](const std::string& m) {
    if (warnings) warnings->push_back(m);
  };
  const json& articles = field(document, "data", json::value_t::array, "$");
  std::vector<MrcExample> out;
  std::set<std::string> ids;
  std::size_t passage_index = 0;
  for (std::size_t a = 0; a < articles.size(); ++a) {
    const std::string apath = index_path("$.data", a);
    const json& article = articles[a];
    const std::string title =
        article.is_object() && article.contains("title") && article["title"].is_string()
            ? article["title"].get<std::string>()
            : std::string();
    const json& paragraphs = field(article, "paragraphs", json::value_t::array, apath);
    for (std::size_t p = 0; p < paragraphs.size(); ++p, ++passage_index) {
      const std::string ppath = index_path(apath + ".paragraphs", p);
      const std::string context =
          field(paragraphs[p], "context", json::value_t::string, ppath).get<std::string>();
      const std::u32string context_cps = utf8::decode(context);
      const json& qas = field(paragraphs[p], "qas", json::value_t::array, ppath);
      for (std::size_t q = 0; q < qas.size(); ++q) {
        const std::string qpath = index_path(ppath + ".qas", q);
        MrcExample ex;
        ex.id = field(qas[q], "id", json::value_t::string, qpath).get<std::string>();
        ex.question = field(qas[q], "question", json::value_t::string, qpath).get<std::string>();
        ex.is_impossible = qas[q].contains("is_impossible")
                               ? field(qas[q], "is_impossible", json::value_t::boolean, qpath).get<bool>()
                               : false;
        ex.title = title;
        ex.context = context;
        ex.article = a;
        ex.passage = passage_index;
        if (qas[q].contains("plausible_answers")) ex.plausible_answers = qas[q]["plausible_answers"];
        if (!ids.insert(ex.id).second) throw DataError(qpath + ": duplicate id '" + ex.id + "'");

        const json& answers = field(qas[q], "answers", json::value_t::array, qpath);
        for (std::size_t k = 0; k < answers.size(); ++k) {
          const std::string apath2 = index_path(qpath + ".answers", k);
          Answer ans{field(answers[k], "text", json::value_t::string, apath2).get<std::string>(),
                     field(answers[k], "answer_start", json::value_t::number_unsigned, apath2)
                         .get<std::size_t>()};
          const std::u32string text = utf8::decode(ans.text);
          const bool aligned = ans.answer_start + text.size() <= context_cps.size() &&
                               context_cps.compare(ans.answer_start, text.size(), text) == 0;
          if (!aligned) {
            if (auto found = nearest_occurrence(context_cps, text, ans.answer_start)) {
              warn(apath2 + " (" + ex.id + "): answer_start " + std::to_string(ans.answer_start) +
                   " repaired to " + std::to_string(*found));
              ans.answer_start = *found;
            } else {
              warn(apath2 + " (" + ex.id + "): answer text not found in context; example flagged");
              ex.flagged = true;
            }
          }
          ex.answers.push_back(std::move(ans));
        }
        if (ex.is_impossible && !ex.answers.empty()) {
          throw DataError(qpath + " (" + ex.id + "): impossible question carries answers");
        }
        if (!ex.is_impossible && ex.answers.empty()) {
          throw DataError(qpath + " (" + ex.id + "): answerable question has no answers");
        }
        out.push_back(std::move(ex));
      }
    }
  }
  return out;
}

std::vector<MrcExample> load_squad_v2(const std::filesystem::path& path,
                                      std::vector<std::string>* warnings) {
  try {
    return parse_squad_v2(io::read_json(path), warnings);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

json serialize_squad_v2(const std::vector<MrcExample>& examples, const std::string& version) {
  json data = json::array();
  std::map<std::size_t, std::size_t> article_slot;  // article index -> position in data
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> passage_slot;
  for (const auto& ex : examples) {
    auto [ait, new_article] = article_slot.emplace(ex.article, data.size());
    if (new_article) data.push_back({{"title", ex.title}, {"paragraphs", json::array()}});
    json& paragraphs = data[ait->second]["paragraphs"];
    auto [pit, new_passage] = passage_slot.emplace(ex.passage, std::make_pair(ait->second, paragraphs.size()));
    if (new_passage) paragraphs.push_back({{"context", ex.context}, {"qas", json::array()}});
    json answers = json::array();
    for (const auto& a : ex.answers) answers.push_back({{"text", a.text}, {"answer_start", a.answer_start}});
    json qa = {{"id", ex.id},
               {"question", ex.question},
               {"is_impossible", ex.is_impossible},
               {"answers", answers}};
    if (ex.is_impossible) qa["plausible_answers"] = ex.plausible_answers;
    data[pit->second.first]["paragraphs"][pit->second.second]["qas"].push_back(std::move(qa));
  }
  return {{"version", version}, {"data", data}};
}

void save_squad_v2(const std::filesystem::path& path, const std::vector<MrcExample>& examples) {
  io::write_json(path, serialize_squad_v2(examples));
}

DatasetStats dataset_stats(const std::vector<MrcExample>& examples) {
  std::set<std::size_t> articles, passages;
  DatasetStats s;
  for (const auto& ex : examples) {
    articles.insert(ex.article);
    passages.insert(ex.passage);
    ++s.questions;
    if (ex.is_impossible) ++s.unanswerable;
  }
  s.articles = articles.size();
  s.passages = passages.size();
  return s;
}

json stats_json(const DatasetStats& s) {
  return {{"articles", s.articles},
          {"passages", s.passages},
          {"questions", s.questions},
          {"unanswerable", s.unanswerable}};
}

EncodedExample encode_example(const MrcExample& example, std::size_t index,
                              const Vocabulary& vocab, const PairLimits& limits,
                              const srl::AnnotationMap* annotations, std::size_t m_max) {
  EncodedExample out{index, encode_pair(example.question, example.context, vocab, limits), {}};
  if (annotations) {
    auto it = annotations->find(example.id);
    if (it == annotations->end()) throw DataError("no SRL annotation for id '" + example.id + "'");
    try {
      out.frame_slots =
          align_frames(it->second.question_frames, it->second.context_frames, out.pair, m_max);
    } catch (const DataError& e) {
      throw DataError("annotation for id '" + example.id + "': " + e.what());
    }
  }
  return out;
}

std::vector<Batch> make_batches(const std::vector<MrcExample>& examples, const Vocabulary& vocab,
                                const PairLimits& limits, std::size_t batch_size,
                                std::uint64_t seed, const srl::AnnotationMap* annotations,
                                std::size_t m_max) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    Batch b;
    const std::size_t end = std::min(order.size(), start + batch_size);
    for (std::size_t i = start; i < end; ++i) {
      b.items.push_back(
          encode_example(examples[order[i]], order[i], vocab, limits, annotations, m_max));
      b.length = std::max(b.length, b.items.back().pair.length());
    }
    for (auto& item : b.items) pad_to(item.pair, b.length);
    batches.push_back(std::move(b));
  }
  return batches;
}

void FixtureConfig::validate() const {
  if (!(unanswerable_fraction >= 0.0 && unanswerable_fraction <= 1.0)) {
    throw ConfigError("fixture: unanswerable_fraction must lie in [0, 1]");
  }
  if (context_words < 2) throw ConfigError("fixture: context_words must be >= 2");
  if (vocab_size > fixture_word_pool_size()) {
    throw ConfigError("fixture: vocab_size " + std::to_string(vocab_size) + " exceeds the " +
                      std::to_string(fixture_word_pool_size()) + "-word pool");
  }
  // Unanswerable items need one content word outside the context.
  if (vocab_size < context_words + 1) {
    throw ConfigError("fixture: vocab_size must exceed context_words");
  }
}

namespace {

const std::vector<std::string>& noun_pool() {
  static const std::vector<std::string> pool = {
      "nhà",  "sông", "núi",  "cây",  "hoa",  "lá",   "mưa",  "gió",  "biển", "trăng",
      "sao",  "mây",  "đèn",  "bàn",  "ghế",  "cửa",  "sách", "bút",  "giấy", "thuyền",
      "xe",   "đường", "cầu", "chợ",  "trường", "lớp", "bạn", "mẹ",   "cha",  "anh",
      "chị",  "em",   "cơm",  "cá",   "gà",   "vịt",  "trâu", "bò",   "mèo",  "chó",
      "lúa",  "ngô",  "khoai", "đậu", "muối", "phòng", "áo", "nón", "giày", "túi",
      "đồng", "rừng", "suối", "hồ",   "đảo",  "phố",  "làng", "quê",  "tàu",  "ga"};
  return pool;
}

const std::vector<std::string>& verb_pool() {
  static const std::vector<std::string> pool = {"thấy", "có", "gặp", "tìm", "nhớ", "vẽ"};
  return pool;
}

}  // namespace

std::size_t fixture_word_pool_size() { return noun_pool().size(); }

Fixture gen_fixture(const FixtureConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const std::vector<std::string> pool(noun_pool().begin(), noun_pool().begin() + config.vocab_size);

  const auto impossible_count = static_cast<std::size_t>(
      std::llround(config.unanswerable_fraction * static_cast<double>(config.size)));
  std::vector<bool> impossible(config.size, false);
  std::fill(impossible.begin(), impossible.begin() + impossible_count, true);
  std::shuffle(impossible.begin(), impossible.end(), rng);

  constexpr std::size_t kQuestionsPerPassage = 2;
  constexpr std::size_t kPassagesPerArticle = 4;
  Fixture out;
  std::vector<std::string> context_nouns;
  std::string context, verb;
  for (std::size_t i = 0; i < config.size; ++i) {
    const std::size_t passage = i / kQuestionsPerPassage;
    if (i % kQuestionsPerPassage == 0) {
      std::vector<std::string> shuffled = pool;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      context_nouns.assign(shuffled.begin(), shuffled.begin() + config.context_words);
      verb = verb_pool()[rng() % verb_pool().size()];
      context = verb;
      for (const auto& n : context_nouns) context += " " + n;
      context += " .";
    }
    MrcExample ex;
    ex.id = config.id_prefix + "-" + std::to_string(i);
    ex.passage = passage;
    ex.article = passage / kPassagesPerArticle;
    ex.title = "bài " + std::to_string(ex.article + 1);
    ex.context = context;
    ex.is_impossible = impossible[i];

    // Word positions: 0 = verb, 1..context_words = nouns, last = ".".
    std::size_t target_word = 0;
    std::string target;
    if (!ex.is_impossible || config.semantic_only) {
      target_word = 1 + rng() % config.context_words;
      target = context_nouns[target_word - 1];
    } else {
      std::vector<std::string> absent;
      for (const auto& w : pool) {
        if (std::find(context_nouns.begin(), context_nouns.end(), w) == context_nouns.end()) {
          absent.push_back(w);
        }
      }
      target = absent[rng() % absent.size()];
    }
    ex.question = "từ " + target + " ở đâu ?";
    if (!ex.is_impossible) {
      std::size_t start = utf8::length(verb) + 1;
      for (std::size_t w = 1; w < target_word; ++w) start += utf8::length(context_nouns[w - 1]) + 1;
      ex.answers.push_back({target, start});
    }

    const std::size_t context_len = config.context_words + 2;
    srl::SrlFrame question_frame{2, {"O", "B-ARG0", "B-PRED", "B-ARGM-LOC", "O"}};
    srl::SrlFrame context_frame{0, std::vector<std::string>(context_len, "O")};
    context_frame.labels[0] = "B-PRED";
    if (!ex.is_impossible) {
      context_frame.labels[target_word] = "B-ARG1";
    } else if (config.semantic_only) {
      context_frame.labels[target_word] = "B-ARG0";
    }
    out.annotations[ex.id] = {{question_frame}, {context_frame}};
    out.examples.push_back(std::move(ex));
  }
  return out;
}

}  // namespace retrosem::data
