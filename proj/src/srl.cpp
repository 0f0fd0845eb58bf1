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

#include "retrosem/srl.hpp"

#include <algorithm>
#include <future>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "retrosem/error.hpp"
#include "retrosem/io.hpp"
#include "retrosem/nn/checkpoint.hpp"
#include "retrosem/nn/ops.hpp"

namespace retrosem::srl {

using nlohmann::json;
using nn::Tensor;

namespace {

struct ParsedTag {
  char prefix = 'O';  // 'O', 'B' or 'I'
  std::string role;
};

ParsedTag parse_tag(const std::string& tag) {
  if (tag == "O") return {};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
    return {tag[0], tag.substr(2)};
  }
  throw DataError("malformed BIO tag '" + tag + "'");
}

std::string join_path(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

}  // namespace

std::vector<std::string> LabelInventory::default_roles() {
  return {"PRED", "ARG0", "ARG1", "ARG2", "ARGM-LOC", "ARGM-TMP"};
}

LabelInventory::LabelInventory(std::vector<std::string> roles) : roles_(std::move(roles)) {
  if (std::find(roles_.begin(), roles_.end(), kPredicateRole) == roles_.end()) {
    throw ConfigError("label inventory must contain the " + kPredicateRole + " role");
  }
  tags_ = {"[PAD]", "O"};
  for (const auto& r : roles_) {
    if (r.empty() || r == "O" || r == "[PAD]") throw ConfigError("invalid role name '" + r + "'");
    tags_.push_back("B-" + r);
    tags_.push_back("I-" + r);
  }
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (!index_.emplace(tags_[i], i).second) {
      throw ConfigError("duplicate role in label inventory: '" + tags_[i] + "'");
    }
  }
}

std::size_t LabelInventory::id(const std::string& tag) const {
  auto it = index_.find(tag);
  if (it == index_.end()) throw InventoryError("unknown SRL label '" + tag + "'");
  return it->second;
}

void validate_frame(const SrlFrame& frame, std::size_t word_count) {
  if (frame.labels.size() != word_count) {
    throw DataError("frame has " + std::to_string(frame.labels.size()) + " labels for " +
                    std::to_string(word_count) + " words");
  }
  if (frame.predicate >= 0) {
    const auto p = static_cast<std::size_t>(frame.predicate);
    if (p >= word_count) {
      throw DataError("predicate index " + std::to_string(p) + " outside sentence of " +
                      std::to_string(word_count) + " words");
    }
    if (frame.labels[p] != "B-" + kPredicateRole) {
      throw DataError("label at predicate index " + std::to_string(p) + " is '" +
                      frame.labels[p] + "', expected B-PRED");
    }
  } else if (frame.predicate != -1) {
    throw DataError("predicate index must be >= 0 or -1 for the fallback frame");
  }
  ParsedTag prev;
  for (std::size_t i = 0; i < word_count; ++i) {
    const ParsedTag cur = parse_tag(frame.labels[i]);
    if (cur.prefix == 'I' && (prev.prefix == 'O' || prev.role != cur.role)) {
      throw DataError("'" + frame.labels[i] + "' at word " + std::to_string(i) +
                      " does not continue a span of the same role");
    }
    prev = cur;
  }
}

void validate_sentence(const AnnotatedSentence& sentence) {
  int last = std::numeric_limits<int>::min();
  for (const auto& f : sentence.frames) {
    validate_frame(f, sentence.words.size());
    if (f.predicate <= last) throw DataError("frames must be sorted by distinct predicate index");
    last = f.predicate;
  }
}

std::vector<std::string> repair_bio(std::vector<std::string> labels) {
  ParsedTag prev;
  for (auto& l : labels) {
    ParsedTag cur = parse_tag(l);
    if (cur.prefix == 'I' && (prev.prefix == 'O' || prev.role != cur.role)) {
      l = "B-" + cur.role;
      cur.prefix = 'B';
    }
    prev = cur;
  }
  return labels;
}

SrlFrame fallback_frame(std::size_t word_count) {
  return {-1, std::vector<std::string>(word_count, "O")};
}

std::vector<LabeledSpan> decode_spans(const AnnotatedSentence& sentence, std::size_t index) {
  std::vector<LabeledSpan> spans;
  for (const auto& frame : sentence.frames) {
    std::optional<LabeledSpan> open;
    auto close = [&] {
      if (open && open->role != kPredicateRole) spans.push_back(*open);
      open.reset();
    };
    for (std::size_t i = 0; i < frame.labels.size(); ++i) {
      const ParsedTag t = parse_tag(frame.labels[i]);
      if (t.prefix == 'I' && open && open->role == t.role) {
        open->end = i;
        continue;
      }
      close();
      // An orphan I- opens a span, matching what repair_bio would produce.
      if (t.prefix != 'O') open = LabeledSpan{index, frame.predicate, t.role, i, i};
    }
    close();
  }
  return spans;
}

SpanScore span_prf(const std::vector<AnnotatedSentence>& gold,
                   const std::vector<AnnotatedSentence>& predicted) {
  if (gold.size() != predicted.size()) {
    throw InputError("span_prf: " + std::to_string(gold.size()) + " gold sentences vs " +
                     std::to_string(predicted.size()) + " predicted");
  }
  std::set<LabeledSpan> g, p;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].words.size() != predicted[i].words.size()) {
      throw InputError("span_prf: sentence " + std::to_string(i) + " has " +
                       std::to_string(gold[i].words.size()) + " gold words vs " +
                       std::to_string(predicted[i].words.size()) + " predicted");
    }
    for (auto& s : decode_spans(gold[i], i)) g.insert(std::move(s));
    for (auto& s : decode_spans(predicted[i], i)) p.insert(std::move(s));
  }
  SpanScore score;
  score.gold = g.size();
  score.predicted = p.size();
  for (const auto& s : p) score.matched += g.count(s);
  if (g.empty() && p.empty()) {
    score.precision = score.recall = score.f1 = 100.0;
    return score;
  }
  score.precision = p.empty() ? 0.0 : 100.0 * score.matched / score.predicted;
  score.recall = g.empty() ? 0.0 : 100.0 * score.matched / score.gold;
  const double sum = score.precision + score.recall;
  score.f1 = sum > 0.0 ? 2.0 * score.precision * score.recall / sum : 0.0;
  return score;
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k,
                                                  std::uint64_t seed) {
  if (k == 0) throw ConfigError("kfold_split: k must be >= 1");
  if (k > n) {
    throw ConfigError("kfold_split: k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(order.begin() + pos, order.begin() + pos + size);
    pos += size;
  }
  return folds;
}

void SrlTrainConfig::validate() const {
  if (folds < 2) throw ConfigError("srl.folds must be >= 2");
  if (epochs == 0) throw ConfigError("srl.epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("srl.batch_size must be >= 1");
  if (indicator_dim == 0) throw ConfigError("srl.indicator_dim must be >= 1");
  nn::OptimizerConfig{learning_rate, 0.9, 0.999, 1e-8, weight_decay, 1}.validate();
}

SrlTagger::SrlTagger(const SrlTrainConfig& config, Vocabulary vocab, LabelInventory inventory,
                     std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)), inventory_(std::move(inventory)) {
  config_.encoder.vocab_size = vocab_.size();
  std::mt19937_64 rng(seed);
  encoder_ = std::make_unique<Encoder>(config_.encoder, params_, "srl.encoder", rng);
  const std::size_t d = config_.encoder.model_dim;
  predicate_head_ = nn::Linear(params_, "srl.predicate_head", d, 2, rng);
  indicator_embedding_ =
      params_.add("srl.indicator_embedding", {2, config_.indicator_dim}, nn::Init::kNormal, rng);
  argument_head_ =
      nn::Linear(params_, "srl.argument_head", d + config_.indicator_dim, inventory_.size(), rng);
}

Tensor SrlTagger::word_states(const std::vector<std::string>& words) const {
  if (words.empty()) throw InputError("srl: empty sentence");
  const EncodedText enc = encode_words(words, vocab_);
  const std::size_t limit = config_.encoder.max_position;
  if (enc.ids.size() + 2 > limit) {
    throw IndexError("srl: sentence needs " + std::to_string(enc.ids.size() + 2) +
                     " positions, encoder has " + std::to_string(limit));
  }
  std::vector<TokenId> ids{Vocabulary::kCls};
  ids.insert(ids.end(), enc.ids.begin(), enc.ids.end());
  ids.push_back(Vocabulary::kSep);
  const std::vector<int> segments(ids.size(), 0);
  const std::vector<bool> mask(ids.size(), true);
  const Tensor h = encoder_->encode(ids, segments, mask);
  std::vector<Span> spans;
  spans.reserve(enc.word_spans.size());
  for (const auto& [b, e] : enc.word_spans) spans.emplace_back(b + 1, e + 1);
  return nn::span_max(h, spans);
}

Tensor SrlTagger::argument_logits(const Tensor& states, std::size_t predicate) const {
  std::vector<std::size_t> indicator(states.rows(), 0);
  indicator[predicate] = 1;
  return argument_head_(nn::concat_cols({states, nn::embedding(indicator_embedding_, indicator)}));
}

Tensor SrlTagger::loss(const AnnotatedSentence& sentence) const {
  validate_sentence(sentence);
  const Tensor states = word_states(sentence.words);
  std::vector<std::size_t> is_pred(sentence.words.size(), 0);
  for (const auto& f : sentence.frames) {
    if (f.predicate >= 0) is_pred[static_cast<std::size_t>(f.predicate)] = 1;
  }
  Tensor total = nn::cross_entropy(predicate_head_(states), is_pred);
  for (const auto& f : sentence.frames) {
    if (f.predicate < 0) continue;
    std::vector<std::size_t> targets;
    targets.reserve(f.labels.size());
    for (const auto& l : f.labels) targets.push_back(inventory_.id(l));
    total = nn::add(total, nn::cross_entropy(
                               argument_logits(states, static_cast<std::size_t>(f.predicate)),
                               targets));
  }
  return total;
}

AnnotatedSentence SrlTagger::tag(const std::vector<std::string>& words) const {
  nn::NoGradGuard guard;
  AnnotatedSentence out{words, {}};
  const Tensor states = word_states(words);
  const Tensor pred = predicate_head_(states);
  const std::size_t n = words.size();
  const std::string b_pred = "B-" + kPredicateRole;
  const std::size_t pred_b = inventory_.id(b_pred);
  const std::size_t pred_i = inventory_.id("I-" + kPredicateRole);
  for (std::size_t p = 0; p < n; ++p) {
    if (pred.at(p, 1) <= pred.at(p, 0)) continue;
    const Tensor logits = argument_logits(states, p);
    SrlFrame frame{static_cast<int>(p), std::vector<std::string>(n)};
    for (std::size_t w = 0; w < n; ++w) {
      // PAD is never a legal output label; PRED only marks the predicate itself.
      std::size_t best = LabelInventory::outside_id();
      for (std::size_t t = best + 1; t < inventory_.size(); ++t) {
        if (t == pred_b || t == pred_i) continue;
        if (logits.at(w, t) > logits.at(w, best)) best = t;
      }
      frame.labels[w] = inventory_.tag(best);
    }
    frame.labels[p] = b_pred;
    frame.labels = repair_bio(std::move(frame.labels));
    out.frames.push_back(std::move(frame));
  }
  return out;
}

void SrlTagger::save(const std::filesystem::path& path) const {
  json meta = {{"kind", "srl-tagger"},
               {"config", config_},
               {"roles", inventory_.roles()},
               {"vocab_size", vocab_.size()}};
  nn::save_checkpoint(path, params_, meta);
}

std::unique_ptr<SrlTagger> SrlTagger::load(const std::filesystem::path& path,
                                           const Vocabulary& vocab) {
  const nn::Checkpoint ck = nn::read_checkpoint(path);
  if (ck.meta.value("kind", "") != "srl-tagger") {
    throw DataError(path.string() + " is not an SRL tagger checkpoint");
  }
  if (ck.meta.at("vocab_size").get<std::size_t>() != vocab.size()) {
    throw DataError(path.string() + ": tagger was trained with a vocabulary of " +
                    ck.meta.at("vocab_size").dump() + " entries, got " +
                    std::to_string(vocab.size()));
  }
  auto config = ck.meta.at("config").get<SrlTrainConfig>();
  auto tagger = std::make_unique<SrlTagger>(
      config, vocab, LabelInventory(ck.meta.at("roles").get<std::vector<std::string>>()), 0);
  nn::load_into(ck, tagger->params_);
  return tagger;
}

void train_tagger(SrlTagger& tagger, const std::vector<AnnotatedSentence>& train,
                  const SrlTrainConfig& config, std::uint64_t seed) {
  if (train.empty()) throw InputError("srl: empty training set");
  const nn::OptimizerConfig opt{config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay, 1};
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<Tensor> losses;
      for (std::size_t i = start; i < end; ++i) losses.push_back(tagger.loss(train[order[i]]));
      const Tensor batch = nn::scale(nn::sum(nn::concat_rows(losses)),
                                     1.0 / static_cast<double>(losses.size()));
      tagger.params().zero_grad();
      batch.backward();
      nn::adamw_step(tagger.params(), opt);
    }
  }
}

KFoldResult train_srl_kfold(const std::vector<AnnotatedSentence>& dataset,
                            const SrlTrainConfig& config, const Vocabulary& vocab,
                            const LabelInventory& inventory) {
  if (dataset.empty()) throw InputError("train_srl_kfold: empty dataset");
  config.validate();
  for (const auto& s : dataset) validate_sentence(s);
  const auto folds = kfold_split(dataset.size(), config.folds, config.seed);

  auto run_fold = [&](std::size_t f) {
    std::vector<AnnotatedSentence> train, held;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      for (std::size_t i : folds[g]) (g == f ? held : train).push_back(dataset[i]);
    }
    auto tagger = std::make_unique<SrlTagger>(config, vocab, inventory, config.seed + f);
    train_tagger(*tagger, train, config, config.seed + f);
    std::vector<AnnotatedSentence> predicted;
    for (const auto& s : held) predicted.push_back(tagger->tag(s.words));
    return std::make_pair(std::move(tagger), span_prf(held, predicted));
  };

  KFoldResult result;
  if (config.parallel) {
    std::vector<std::future<std::pair<std::unique_ptr<SrlTagger>, SpanScore>>> jobs;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      jobs.push_back(std::async(std::launch::async, run_fold, f));
    }
    for (auto& j : jobs) {
      auto [tagger, score] = j.get();
      result.taggers.push_back(std::move(tagger));
      result.folds.push_back(score);
    }
  } else {
    for (std::size_t f = 0; f < folds.size(); ++f) {
      auto [tagger, score] = run_fold(f);
      result.taggers.push_back(std::move(tagger));
      result.folds.push_back(score);
    }
  }
  const double k = static_cast<double>(result.folds.size());
  for (const auto& s : result.folds) {
    result.average.precision += s.precision / k;
    result.average.recall += s.recall / k;
    result.average.f1 += s.f1 / k;
    result.average.matched += s.matched;
    result.average.predicted += s.predicted;
    result.average.gold += s.gold;
  }
  return result;
}

namespace {

json score_json(const SpanScore& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
          {"matched", s.matched},     {"predicted", s.predicted}, {"gold", s.gold}};
}

}  // namespace

json kfold_report_json(const KFoldResult& result) {
  json folds = json::array();
  for (std::size_t f = 0; f < result.folds.size(); ++f) {
    json row = score_json(result.folds[f]);
    row["fold"] = f + 1;
    folds.push_back(row);
  }
  return {{"folds", folds}, {"average", score_json(result.average)}};
}

std::string kfold_report_table(const KFoldResult& result) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << std::left << std::setw(10) << "Fold" << std::right << std::setw(10) << "Precision"
      << std::setw(10) << "Recall" << std::setw(10) << "F1" << '\n';
  auto row = [&](const std::string& name, const SpanScore& s) {
    out << std::left << std::setw(10) << name << std::right << std::setw(10) << s.precision
        << std::setw(10) << s.recall << std::setw(10) << s.f1 << '\n';
  };
  for (std::size_t f = 0; f < result.folds.size(); ++f) row(std::to_string(f + 1), result.folds[f]);
  row("Average", result.average);
  return out.str();
}

std::vector<SrlFrame> pool_frames(const std::vector<std::vector<SrlFrame>>& per_tagger,
                                  std::size_t m_max, std::size_t word_count) {
  if (m_max == 0) throw ConfigError("m_max must be >= 1");
  std::set<std::pair<int, std::vector<std::string>>> unique;
  for (const auto& frames : per_tagger) {
    for (const auto& f : frames) unique.emplace(f.predicate, f.labels);
  }
  std::vector<SrlFrame> out;
  for (const auto& [p, labels] : unique) {
    if (out.size() == m_max) break;
    out.push_back({p, labels});
  }
  if (out.empty()) out.push_back(fallback_frame(word_count));
  return out;
}

std::vector<SrlFrame> annotate_text(const std::string& text,
                                    const std::vector<const SrlTagger*>& taggers,
                                    std::size_t m_max) {
  std::vector<std::string> words;
  for (auto& w : split_words(text)) words.push_back(std::move(w.text));
  if (words.empty()) throw InputError("annotate: empty text");
  std::vector<std::vector<SrlFrame>> per_tagger;
  for (const SrlTagger* t : taggers) per_tagger.push_back(t->tag(words).frames);
  return pool_frames(per_tagger, m_max, words.size());
}

json frame_to_json(const SrlFrame& frame) {
  return {{"predicate", frame.predicate}, {"labels", frame.labels}};
}

SrlFrame frame_from_json(const json& j) {
  return {j.at("predicate").get<int>(), j.at("labels").get<std::vector<std::string>>()};
}

namespace {

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::istringstream in(io::read_file(path));
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(join_path(path, number) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(join_path(path, number) + ": " + e.what());
    }
  }
}

json frames_json(const std::vector<SrlFrame>& frames) {
  json arr = json::array();
  for (const auto& f : frames) arr.push_back(frame_to_json(f));
  return arr;
}

std::vector<SrlFrame> frames_from(const json& arr) {
  std::vector<SrlFrame> frames;
  for (const auto& f : arr) frames.push_back(frame_from_json(f));
  return frames;
}

}  // namespace

std::vector<AnnotatedSentence> read_srl_jsonl(const std::filesystem::path& path) {
  std::vector<AnnotatedSentence> out;
  for_each_jsonl(path, [&](const json& j) {
    AnnotatedSentence s{j.at("tokens").get<std::vector<std::string>>(),
                        frames_from(j.value("frames", json::array()))};
    std::sort(s.frames.begin(), s.frames.end(),
              [](const SrlFrame& a, const SrlFrame& b) { return a.predicate < b.predicate; });
    validate_sentence(s);
    out.push_back(std::move(s));
  });
  return out;
}

void write_srl_jsonl(const std::filesystem::path& path,
                     const std::vector<AnnotatedSentence>& sentences) {
  std::string text;
  for (const auto& s : sentences) {
    text += json{{"tokens", s.words}, {"frames", frames_json(s.frames)}}.dump();
    text += '\n';
  }
  io::atomic_write(path, text);
}

AnnotationMap read_annotations(const std::filesystem::path& path) {
  AnnotationMap out;
  for_each_jsonl(path, [&](const json& j) {
    const auto id = j.at("id").get<std::string>();
    QaAnnotation a{frames_from(j.at("question_frames")), frames_from(j.at("context_frames"))};
    if (!out.emplace(id, std::move(a)).second) throw DataError("duplicate id '" + id + "'");
  });
  return out;
}

void write_annotations(const std::filesystem::path& path, const AnnotationMap& annotations) {
  std::string text;
  for (const auto& [id, a] : annotations) {
    text += json{{"id", id},
                 {"question_frames", frames_json(a.question_frames)},
                 {"context_frames", frames_json(a.context_frames)}}
                .dump();
    text += '\n';
  }
  io::atomic_write(path, text);
}

std::vector<AnnotatedSentence> generate_separable_corpus(std::size_t sentences,
                                                         std::uint64_t seed) {
  static const std::vector<std::string> agents = {"Lan", "Minh", "Hùng", "Mai", "Nam"};
  static const std::vector<std::string> verbs = {"mua", "đọc", "viết", "bán", "xem"};
  static const std::vector<std::string> objects = {"sách", "báo", "thư", "áo", "phim"};
  static const std::vector<std::string> modifiers = {"mới", "cũ", "đẹp", "hay"};
  static const std::vector<std::string> places = {"Huế", "Vinh", "Sapa", "Pleiku"};
  static const std::vector<std::string> times = {"sáng", "tối"};
  std::mt19937_64 rng(seed);
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  std::vector<AnnotatedSentence> out;
  for (std::size_t s = 0; s < sentences; ++s) {
    std::vector<std::string> words, labels;
    auto push = [&](const std::string& w, const std::string& l) {
      words.push_back(w);
      labels.push_back(l);
    };
    const bool with_time = (rng() & 1) != 0;
    const bool with_place = (rng() & 1) != 0;
    const bool with_modifier = (rng() & 1) != 0;
    if (with_time) push(pick(times), "B-ARGM-TMP");
    push(pick(agents), "B-ARG0");
    const int predicate = static_cast<int>(words.size());
    push(pick(verbs), "B-PRED");
    push(pick(objects), "B-ARG1");
    if (with_modifier) push(pick(modifiers), "I-ARG1");
    if (with_place) {
      push("ở", "O");
      push(pick(places), "B-ARGM-LOC");
    }
    push(".", "O");
    out.push_back({std::move(words), {SrlFrame{predicate, std::move(labels)}}});
  }
  return out;
}

}  // namespace retrosem::srl
