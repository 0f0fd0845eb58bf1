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
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace retrosem {

using TokenId = std::size_t;
using Span = std::pair<std::size_t, std::size_t>;  // half-open

/// Subword vocabulary. Ids are dense; the four specials occupy 0..3.
class Vocabulary {
 public:
  static constexpr TokenId kCls = 0;
  static constexpr TokenId kSep = 1;
  static constexpr TokenId kPad = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::string_view kContinuation = "##";

  Vocabulary();
  /// Builds from an ordered token list; the specials must come first.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  /// One token per line, line number = id.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  static const std::vector<std::string>& special_tokens();

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// A whitespace/punctuation word with code-point offsets into its source text.
struct Word {
  std::string text;
  std::size_t char_begin = 0;
  std::size_t char_end = 0;
};

/// Splits on whitespace; each punctuation character becomes its own word.
std::vector<Word> split_words(std::string_view text);

/// Whole words with frequency >= min_frequency plus single-character pieces
/// (initial and continuation) for every character seen, capped at max_size.
/// Word ids follow frequency (descending) then lexicographic order.
Vocabulary build_vocab(const std::vector<std::string>& corpus, std::size_t min_frequency,
                       std::size_t max_size);

struct EncodedText {
  std::vector<std::string> pieces;
  std::vector<TokenId> ids;
  std::vector<Span> word_spans;  // into pieces
  std::vector<Word> words;
};

/// Greedy longest-match segmentation of each word. A word that cannot be
/// segmented becomes a single [UNK].
EncodedText encode_text(std::string_view text, const Vocabulary& vocab);
/// Segments already-split words without re-splitting them.
EncodedText encode_words(const std::vector<std::string>& words, const Vocabulary& vocab);

/// [CLS] question [SEP] context [SEP] [PAD]*
struct TokenizedPair {
  std::vector<TokenId> subword_ids;
  std::vector<int> segment_ids;
  std::vector<bool> attention_mask;
  std::vector<Span> word_spans;        // question words, then context words
  std::size_t context_word_offset = 0; // index of the first context word
  std::vector<Span> context_char_spans;  // code-point offsets per kept context word
  std::size_t context_words_total = 0;   // before truncation
  std::size_t question_words_total = 0;  // before truncation

  std::size_t length() const { return subword_ids.size(); }
  std::size_t word_count() const { return word_spans.size(); }
  std::size_t context_word_count() const { return word_spans.size() - context_word_offset; }
  bool context_truncated() const { return context_word_count() < context_words_total; }
  /// Subword positions [begin, end) of the context segment, excluding the final [SEP].
  Span context_subwords() const;
  /// True where a subword may start or end an answer span.
  std::vector<bool> context_mask() const;
};

struct PairLimits {
  std::size_t max_seq_length = 512;
  std::size_t max_query_length = 64;
};

TokenizedPair encode_pair(std::string_view question, std::string_view context,
                          const Vocabulary& vocab, const PairLimits& limits);

/// Appends [PAD] up to `length`.
void pad_to(TokenizedPair& pair, std::size_t length);

}  // namespace retrosem
