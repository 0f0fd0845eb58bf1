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
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "retrosem/sembert.hpp"
#include "retrosem/srl.hpp"
#include "retrosem/tokenizer.hpp"

namespace retrosem::data {

struct Answer {
  std::string text;
  std::size_t answer_start = 0;  // code points into the context

  bool operator==(const Answer&) const = default;
};

struct MrcExample {
  std::string id;
  std::string title;
  std::string context;
  std::string question;
  bool is_impossible = false;
  std::vector<Answer> answers;
  nlohmann::json plausible_answers = nlohmann::json::array();  // stored, never scored
  bool flagged = false;    // an answer offset could not be repaired
  std::size_t article = 0;  // index of the article in its source file
  std::size_t passage = 0;  // index of the paragraph across the whole file
};

/// Parses the SQuAD-2.0 layout (data -> paragraphs -> qas). Misaligned answer
/// offsets are moved to the nearest occurrence of the answer text; answers
/// whose text never occurs flag the example. Each repair or flag appends a
/// message to `warnings` when given. Structural problems throw ParseError
/// naming the JSON path.
std::vector<MrcExample> parse_squad_v2(const nlohmann::json& document,
                                       std::vector<std::string>* warnings = nullptr);
std::vector<MrcExample> load_squad_v2(const std::filesystem::path& path,
                                      std::vector<std::string>* warnings = nullptr);

/// Inverse of parse_squad_v2 for well-formed examples.
nlohmann::json serialize_squad_v2(const std::vector<MrcExample>& examples,
                                  const std::string& version = "v2.0");
void save_squad_v2(const std::filesystem::path& path, const std::vector<MrcExample>& examples);

struct DatasetStats {
  std::size_t articles = 0;
  std::size_t passages = 0;
  std::size_t questions = 0;
  std::size_t unanswerable = 0;

  bool operator==(const DatasetStats&) const = default;
};

DatasetStats dataset_stats(const std::vector<MrcExample>& examples);
nlohmann::json stats_json(const DatasetStats& stats);

/// One example after tokenization, plus its frame slots when annotated.
struct EncodedExample {
  std::size_t index = 0;  // position in the source list
  TokenizedPair pair;
  std::vector<LabelSequence> frame_slots;
};

EncodedExample encode_example(const MrcExample& example, std::size_t index,
                              const Vocabulary& vocab, const PairLimits& limits,
                              const srl::AnnotationMap* annotations, std::size_t m_max);

struct Batch {
  std::vector<EncodedExample> items;  // padded to the longest member
  std::size_t length = 0;
};

/// Seeded shuffle cut into batches of `batch_size` (the last may be short).
/// With `annotations`, every example id must be annotated (DataError otherwise).
std::vector<Batch> make_batches(const std::vector<MrcExample>& examples, const Vocabulary& vocab,
                                const PairLimits& limits, std::size_t batch_size,
                                std::uint64_t seed, const srl::AnnotationMap* annotations = nullptr,
                                std::size_t m_max = 3);

struct FixtureConfig {
  std::size_t size = 64;
  double unanswerable_fraction = 0.5;
  std::size_t vocab_size = 40;      // distinct content words drawn from
  std::size_t context_words = 8;
  bool semantic_only = false;       // answerability visible only through the frames
  std::uint64_t seed = 1;
  std::string id_prefix = "syn";

  void validate() const;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FixtureConfig, size, unanswerable_fraction,
                                                vocab_size, context_words, semantic_only, seed,
                                                id_prefix)

struct Fixture {
  std::vector<MrcExample> examples;
  srl::AnnotationMap annotations;
};

/// Synthetic Vietnamese-looking MRC items. A question "từ X ở đâu ?" asks
/// where word X is; answerable items contain X once in the context and the
/// context frame marks it as ARG1. Normally unanswerable X is absent; in the
/// semantic-only variant it is present too and tagged as a decoy ARG0.
Fixture gen_fixture(const FixtureConfig& config);

/// Largest content-word pool gen_fixture can draw from.
std::size_t fixture_word_pool_size();

}  // namespace retrosem::data
