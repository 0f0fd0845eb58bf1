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
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "retrosem/encoder.hpp"
#include "retrosem/nn/layers.hpp"
#include "retrosem/nn/optim.hpp"
#include "retrosem/tokenizer.hpp"

namespace retrosem::srl {

/// BIO tag set built from role names. Id 0 is the reserved PAD label, id 1 is
/// O, then B-/I- pairs in role order.
class LabelInventory {
 public:
  static std::vector<std::string> default_roles();

  explicit LabelInventory(std::vector<std::string> roles = default_roles());

  std::size_t size() const { return tags_.size(); }
  static constexpr std::size_t pad_id() { return 0; }
  static constexpr std::size_t outside_id() { return 1; }
  /// Throws InventoryError naming the label when it is unknown.
  std::size_t id(const std::string& tag) const;
  const std::string& tag(std::size_t id) const { return tags_.at(id); }
  const std::vector<std::string>& roles() const { return roles_; }
  const std::vector<std::string>& tags() const { return tags_; }

 private:
  std::vector<std::string> roles_;
  std::vector<std::string> tags_;
  std::map<std::string, std::size_t> index_;
};

inline const std::string kPredicateRole = "PRED";

/// One predicate-argument structure. `predicate == -1` marks the all-O
/// fallback frame emitted for sentences without any detected predicate.
struct SrlFrame {
  int predicate = -1;
  std::vector<std::string> labels;

  bool operator==(const SrlFrame&) const = default;
};

struct AnnotatedSentence {
  std::vector<std::string> words;
  std::vector<SrlFrame> frames;
};

/// Throws DataError when a frame breaks the BIO or predicate invariants.
void validate_frame(const SrlFrame& frame, std::size_t word_count);
void validate_sentence(const AnnotatedSentence& sentence);

/// Demotes every I- tag that does not continue the same role to B-.
std::vector<std::string> repair_bio(std::vector<std::string> labels);

SrlFrame fallback_frame(std::size_t word_count);

// ---- span evaluation -------------------------------------------------------

struct LabeledSpan {
  std::size_t sentence = 0;
  int predicate = -1;
  std::string role;
  std::size_t begin = 0;  // first word
  std::size_t end = 0;    // last word, inclusive

  auto operator<=>(const LabeledSpan&) const = default;
};

/// Argument spans decoded from BIO; the predicate's own PRED span is not an
/// argument and is not returned.
std::vector<LabeledSpan> decode_spans(const AnnotatedSentence& sentence, std::size_t index);

struct SpanScore {
  double precision = 0.0;  // percent
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

SpanScore span_prf(const std::vector<AnnotatedSentence>& gold,
                   const std::vector<AnnotatedSentence>& predicted);

// ---- k-fold ----------------------------------------------------------------

/// Seeded shuffle of 0..n-1 cut into k folds whose sizes differ by at most one.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k,
                                                  std::uint64_t seed);

// ---- tagger ----------------------------------------------------------------

struct SrlTrainConfig {
  std::size_t folds = 10;
  std::size_t epochs = 40;
  double learning_rate = 1e-5;
  double weight_decay = 0.1;
  std::size_t batch_size = 4;
  std::size_t indicator_dim = 8;
  std::uint64_t seed = 13;
  bool parallel = true;
  EncoderConfig encoder{};

  void validate() const;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SrlTrainConfig, folds, epochs, learning_rate,
                                                weight_decay, batch_size, indicator_dim, seed,
                                                parallel, encoder)

/// Two-stage tagger: a per-word predicate head, then per predicate a BIO
/// argument head over encoder states joined with a predicate-indicator embedding.
class SrlTagger {
 public:
  SrlTagger(const SrlTrainConfig& config, Vocabulary vocab, LabelInventory inventory,
            std::uint64_t seed);

  /// Word-level encoder states [W x d] (max over each word's subwords).
  nn::Tensor word_states(const std::vector<std::string>& words) const;
  /// Predicate cross entropy plus the argument cross entropy of every gold frame.
  nn::Tensor loss(const AnnotatedSentence& sentence) const;
  AnnotatedSentence tag(const std::vector<std::string>& words) const;

  nn::ParameterSet& params() { return params_; }
  const Vocabulary& vocab() const { return vocab_; }
  const LabelInventory& inventory() const { return inventory_; }

  void save(const std::filesystem::path& path) const;
  static std::unique_ptr<SrlTagger> load(const std::filesystem::path& path,
                                         const Vocabulary& vocab);

 private:
  nn::Tensor argument_logits(const nn::Tensor& states, std::size_t predicate) const;

  SrlTrainConfig config_;
  Vocabulary vocab_;
  LabelInventory inventory_;
  nn::ParameterSet params_;
  std::unique_ptr<Encoder> encoder_;
  nn::Linear predicate_head_;
  nn::Tensor indicator_embedding_;
  nn::Linear argument_head_;
};

/// Trains on `train` for `config.epochs` epochs with AdamW.
void train_tagger(SrlTagger& tagger, const std::vector<AnnotatedSentence>& train,
                  const SrlTrainConfig& config, std::uint64_t seed);

struct KFoldResult {
  std::vector<std::unique_ptr<SrlTagger>> taggers;
  std::vector<SpanScore> folds;
  SpanScore average;  // arithmetic mean of the fold rows
};

KFoldResult train_srl_kfold(const std::vector<AnnotatedSentence>& dataset,
                            const SrlTrainConfig& config, const Vocabulary& vocab,
                            const LabelInventory& inventory);

/// Fold rows and the Average row as a JSON report and as a plain-text table.
nlohmann::json kfold_report_json(const KFoldResult& result);
std::string kfold_report_table(const KFoldResult& result);

// ---- annotation ------------------------------------------------------------

struct QaAnnotation {
  std::vector<SrlFrame> question_frames;
  std::vector<SrlFrame> context_frames;
};

using AnnotationMap = std::map<std::string, QaAnnotation>;

/// Pools frames from several taggers: dedup on (predicate, labels), sort by
/// predicate index, keep the first m_max, and fall back to one all-O frame.
std::vector<SrlFrame> pool_frames(const std::vector<std::vector<SrlFrame>>& per_tagger,
                                  std::size_t m_max, std::size_t word_count);

std::vector<SrlFrame> annotate_text(const std::string& text,
                                    const std::vector<const SrlTagger*>& taggers,
                                    std::size_t m_max);

// ---- file formats ----------------------------------------------------------

nlohmann::json frame_to_json(const SrlFrame& frame);
SrlFrame frame_from_json(const nlohmann::json& j);

/// {"tokens": [...], "frames": [{"predicate": int, "labels": [...]}]} per line.
std::vector<AnnotatedSentence> read_srl_jsonl(const std::filesystem::path& path);
void write_srl_jsonl(const std::filesystem::path& path,
                     const std::vector<AnnotatedSentence>& sentences);

/// {"id", "question_frames", "context_frames"} per line, ordered by id.
AnnotationMap read_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path, const AnnotationMap& annotations);

/// Synthetic corpus where every label is a function of word identity: one
/// predicate per sentence, single-word ARG0/ARGM-LOC arguments and two-word
/// ARG1 spans (noun + modifier).
std::vector<AnnotatedSentence> generate_separable_corpus(std::size_t sentences,
                                                         std::uint64_t seed);

}  // namespace retrosem::srl
