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

#include "retrosem/tokenizer.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "retrosem/error.hpp"
#include "retrosem/io.hpp"
#include "retrosem/utf8.hpp"

namespace retrosem {

const std::vector<std::string>& Vocabulary::special_tokens() {
  static const std::vector<std::string> specials = {"[CLS]", "[SEP]", "[PAD]", "[UNK]"};
  return specials;
}

Vocabulary::Vocabulary() {
  for (const auto& s : special_tokens()) {
    index_.emplace(s, tokens_.size());
    tokens_.push_back(s);
  }
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  const auto& specials = special_tokens();
  if (tokens.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), tokens.begin())) {
    throw InputError("vocabulary must start with [CLS] [SEP] [PAD] [UNK]");
  }
  Vocabulary v;
  v.tokens_.clear();
  v.index_.clear();
  for (auto& t : tokens) {
    if (!v.index_.emplace(t, v.tokens_.size()).second) {
      throw InputError("duplicate vocabulary token '" + t + "'");
    }
    v.tokens_.push_back(std::move(t));
  }
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  io::atomic_write(path, out);
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw IndexError("token id " + std::to_string(id) + " out of range [0, " +
                     std::to_string(tokens_.size()) + ")");
  }
  return tokens_[id];
}

std::vector<Word> split_words(std::string_view text) {
  const std::u32string cps = utf8::decode(text);
  std::vector<Word> words;
  std::size_t begin = 0;
  bool in_word = false;
  auto close = [&](std::size_t end) {
    if (in_word) {
      words.push_back({utf8::encode(std::u32string_view(cps).substr(begin, end - begin)), begin, end});
      in_word = false;
    }
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i];
    if (utf8::is_space(c)) {
      close(i);
    } else if (utf8::is_punct(c)) {
      close(i);
      words.push_back({utf8::encode(c), i, i + 1});
    } else if (!in_word) {
      begin = i;
      in_word = true;
    }
  }
  close(cps.size());
  return words;
}

Vocabulary build_vocab(const std::vector<std::string>& corpus, std::size_t min_frequency,
                       std::size_t max_size) {
  std::map<std::string, std::size_t> counts;
  std::set<char32_t> alphabet;
  bool any = false;
  for (const auto& doc : corpus) {
    for (const auto& w : split_words(doc)) {
      any = true;
      ++counts[w.text];
      for (char32_t c : utf8::decode(w.text)) alphabet.insert(c);
    }
  }
  if (!any) throw InputError("build_vocab: corpus has no words");

  std::vector<std::string> tokens = Vocabulary::special_tokens();
  std::set<std::string> seen(tokens.begin(), tokens.end());
  for (char32_t c : alphabet) {
    for (std::string piece : {utf8::encode(c), std::string(Vocabulary::kContinuation) + utf8::encode(c)}) {
      if (seen.insert(piece).second) tokens.push_back(piece);
    }
  }
  if (max_size < tokens.size()) {
    throw ConfigError("build_vocab: max_size " + std::to_string(max_size) +
                      " cannot hold the specials and the " + std::to_string(alphabet.size()) +
                      "-character fallback alphabet (" + std::to_string(tokens.size()) +
                      " entries)");
  }

  std::vector<std::pair<std::string, std::size_t>> words;
  for (const auto& [w, n] : counts) {
    if (n >= min_frequency && !seen.count(w)) words.emplace_back(w, n);
  }
  std::sort(words.begin(), words.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  for (const auto& [w, n] : words) {
    if (tokens.size() >= max_size) break;
    tokens.push_back(w);
  }
  return Vocabulary::from_tokens(std::move(tokens));
}

namespace {

void segment_word(const Word& word, const Vocabulary& vocab, EncodedText& out) {
  const std::u32string cps = utf8::decode(word.text);
  std::vector<std::string> pieces;
  std::vector<TokenId> ids;
  std::size_t start = 0;
  while (start < cps.size()) {
    std::optional<TokenId> found;
    std::string piece;
    for (std::size_t end = cps.size(); end > start; --end) {
      std::string candidate = utf8::encode(std::u32string_view(cps).substr(start, end - start));
      if (start > 0) candidate = std::string(Vocabulary::kContinuation) + candidate;
      if (auto id = vocab.find(candidate)) {
        found = id;
        piece = std::move(candidate);
        start = end;
        break;
      }
    }
    if (!found) {
      pieces.assign(1, vocab.token(Vocabulary::kUnk));
      ids.assign(1, Vocabulary::kUnk);
      break;
    }
    pieces.push_back(std::move(piece));
    ids.push_back(*found);
  }
  const std::size_t begin = out.ids.size();
  out.pieces.insert(out.pieces.end(), pieces.begin(), pieces.end());
  out.ids.insert(out.ids.end(), ids.begin(), ids.end());
  out.word_spans.emplace_back(begin, out.ids.size());
  out.words.push_back(word);
}

}  // namespace

EncodedText encode_text(std::string_view text, const Vocabulary& vocab) {
  EncodedText out;
  for (const auto& w : split_words(text)) segment_word(w, vocab, out);
  return out;
}

EncodedText encode_words(const std::vector<std::string>& words, const Vocabulary& vocab) {
  EncodedText out;
  std::size_t offset = 0;
  for (const auto& w : words) {
    const std::size_t len = utf8::length(w);
    segment_word({w, offset, offset + len}, vocab, out);
    offset += len + 1;
  }
  return out;
}

Span TokenizedPair::context_subwords() const {
  if (word_spans.size() <= context_word_offset) return {0, 0};
  return {word_spans[context_word_offset].first, word_spans.back().second};
}

std::vector<bool> TokenizedPair::context_mask() const {
  std::vector<bool> mask(length(), false);
  const auto [b, e] = context_subwords();
  for (std::size_t i = b; i < e; ++i) mask[i] = true;
  return mask;
}

TokenizedPair encode_pair(std::string_view question, std::string_view context,
                          const Vocabulary& vocab, const PairLimits& limits) {
  if (limits.max_seq_length < 8) {
    throw ConfigError("max_seq_length must be >= 8, got " + std::to_string(limits.max_seq_length));
  }
  if (limits.max_query_length < 1) throw ConfigError("max_query_length must be >= 1");
  const EncodedText q = encode_text(question, vocab);
  const EncodedText c = encode_text(context, vocab);
  if (q.words.empty()) throw InputError("encode_pair: empty question");
  if (c.words.empty()) throw InputError("encode_pair: empty context");

  auto span_len = [](const Span& s) { return s.second - s.first; };
  std::size_t q_words = std::min(q.words.size(), limits.max_query_length);
  auto q_subwords = [&](std::size_t n) {
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) total += span_len(q.word_spans[i]);
    return total;
  };
  // Three specials plus at least the first context word must fit.
  const std::size_t first_ctx = span_len(c.word_spans[0]);
  while (q_words > 1 && 3 + q_subwords(q_words) + first_ctx > limits.max_seq_length) --q_words;
  if (3 + q_subwords(q_words) + first_ctx > limits.max_seq_length) {
    throw InputError("encode_pair: question and first context word exceed max_seq_length");
  }
  std::size_t budget = limits.max_seq_length - 3 - q_subwords(q_words);
  std::size_t c_words = 0;
  for (; c_words < c.words.size(); ++c_words) {
    const std::size_t len = span_len(c.word_spans[c_words]);
    if (len > budget) break;
    budget -= len;
  }

  TokenizedPair pair;
  pair.question_words_total = q.words.size();
  pair.context_words_total = c.words.size();
  auto push = [&](TokenId id, int segment) {
    pair.subword_ids.push_back(id);
    pair.segment_ids.push_back(segment);
    pair.attention_mask.push_back(true);
  };
  push(Vocabulary::kCls, 0);
  for (std::size_t w = 0; w < q_words; ++w) {
    const std::size_t begin = pair.subword_ids.size();
    for (std::size_t i = q.word_spans[w].first; i < q.word_spans[w].second; ++i) push(q.ids[i], 0);
    pair.word_spans.emplace_back(begin, pair.subword_ids.size());
  }
  push(Vocabulary::kSep, 0);
  pair.context_word_offset = q_words;
  for (std::size_t w = 0; w < c_words; ++w) {
    const std::size_t begin = pair.subword_ids.size();
    for (std::size_t i = c.word_spans[w].first; i < c.word_spans[w].second; ++i) push(c.ids[i], 1);
    pair.word_spans.emplace_back(begin, pair.subword_ids.size());
    pair.context_char_spans.emplace_back(c.words[w].char_begin, c.words[w].char_end);
  }
  push(Vocabulary::kSep, 1);
  return pair;
}

void pad_to(TokenizedPair& pair, std::size_t length) {
  while (pair.subword_ids.size() < length) {
    pair.subword_ids.push_back(Vocabulary::kPad);
    pair.segment_ids.push_back(0);
    pair.attention_mask.push_back(false);
  }
}

}  // namespace retrosem
