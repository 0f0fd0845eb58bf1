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
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "retrosem/data.hpp"
#include "retrosem/encoder.hpp"
#include "retrosem/metrics.hpp"
#include "retrosem/nn/optim.hpp"
#include "retrosem/sembert.hpp"

namespace retrosem::reader {

// ---- configuration ---------------------------------------------------------

struct ReaderTrainConfig {
  std::string kind = "sketchy";  // "sketchy" or "intensive"
  double learning_rate = 5e-6;
  std::size_t batch_size = 64;
  std::size_t gradient_accumulation_steps = 8;
  std::size_t epochs = 2;
  std::size_t max_steps = 0;  // optimizer steps; 0 = no cap
  double weight_decay = 0.01;
  std::size_t max_answer_length = 30;

  static ReaderTrainConfig sketchy_defaults();
  static ReaderTrainConfig intensive_defaults();
  void validate() const;
  nn::OptimizerConfig optimizer() const;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ReaderTrainConfig, kind, learning_rate, batch_size,
                                                gradient_accumulation_steps, epochs, max_steps,
                                                weight_decay, max_answer_length)

// ---- sketchy module --------------------------------------------------------

struct SketchyOutput {
  double logit_answerable = 0.0;
  double logit_unanswerable = 0.0;

  /// Unanswerable minus answerable logit.
  double score_ext() const { return logit_unanswerable - logit_answerable; }
  bool predicts_unanswerable() const { return logit_unanswerable > logit_answerable; }
};

/// Answerability classifier: encoder, semantic integration, then an affine
/// head on the joint vector of the first question word. With `semantic`
/// false the head reads the [CLS] state and no frames are needed.
class SketchyReader {
 public:
  SketchyReader(const EncoderConfig& encoder, const SemanticConfig& semantic,
                const srl::LabelInventory& inventory, bool use_semantics, std::uint64_t seed);

  /// [1 x 2] logits: (answerable, unanswerable).
  nn::Tensor logits(const data::EncodedExample& example) const;
  SketchyOutput forward(const data::EncodedExample& example) const;
  nn::Tensor loss(const data::EncodedExample& example, bool is_impossible) const;

  bool uses_semantics() const { return use_semantics_; }
  std::size_t m_max() const { return semantic_config_.m_max; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }
  const EncoderConfig& encoder_config() const { return encoder_->config(); }

  void save(const std::filesystem::path& path) const;
  static std::unique_ptr<SketchyReader> load(const std::filesystem::path& path);

 private:
  nn::ParameterSet params_;
  SemanticConfig semantic_config_;
  srl::LabelInventory inventory_;
  bool use_semantics_;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<SemanticIntegrator> integrator_;
  nn::Linear head_;
};

// ---- intensive module ------------------------------------------------------

/// Argmax of start[i] + end[j] over valid i <= j with j - i < max_answer_length.
/// Ties go to the smallest i, then the smallest j. ContractError when no
/// position is valid.
std::pair<std::size_t, std::size_t> best_span(const std::vector<double>& start_logits,
                                              const std::vector<double>& end_logits,
                                              const std::vector<bool>& valid,
                                              std::size_t max_answer_length);

struct IntensiveOutput {
  std::vector<double> start_logits;
  std::vector<double> end_logits;
  std::pair<std::size_t, std::size_t> span{0, 0};
  double score_has = 0.0;
  double score_null = 0.0;
  double score_diff = 0.0;  // score_null - score_has
};

/// Builds the output fields from raw logits; candidates are the context
/// subwords of `pair`, the null score reads position 0 ([CLS]).
IntensiveOutput score_spans(std::vector<double> start_logits, std::vector<double> end_logits,
                            const TokenizedPair& pair, std::size_t max_answer_length);

/// Subword targets of the first answer, or (0, 0) for unanswerable items and
/// answers that fall outside the kept context.
std::pair<std::size_t, std::size_t> span_targets(const data::MrcExample& example,
                                                 const TokenizedPair& pair);

/// Context text covered by subwords [i, j] (whole words).
std::string span_text(const data::MrcExample& example, const TokenizedPair& pair,
                      std::pair<std::size_t, std::size_t> span);

/// Span predictor on a plain encoder with a two-column start/end readout.
class IntensiveReader {
 public:
  IntensiveReader(const EncoderConfig& encoder, std::uint64_t seed);

  /// [n x 2] start/end logits.
  nn::Tensor logits(const TokenizedPair& pair) const;
  IntensiveOutput forward(const TokenizedPair& pair, std::size_t max_answer_length) const;
  /// Start plus end cross entropy over [CLS] and the context subwords.
  nn::Tensor loss(const TokenizedPair& pair, std::pair<std::size_t, std::size_t> target) const;

  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }
  const EncoderConfig& encoder_config() const { return encoder_->config(); }

  void save(const std::filesystem::path& path) const;
  static std::unique_ptr<IntensiveReader> load(const std::filesystem::path& path);

 private:
  nn::ParameterSet params_;
  std::unique_ptr<Encoder> encoder_;
  nn::Linear span_head_;
};

// ---- rear verification -----------------------------------------------------

struct VerifierParams {
  double beta1 = 1.0;
  double beta2 = 1.0;
  double delta = 0.0;

  bool operator==(const VerifierParams&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(VerifierParams, beta1, beta2, delta)

struct Decision {
  double v = 0.0;
  bool unanswerable = false;
};

/// v = beta1 * score_diff + beta2 * score_ext; unanswerable iff v > delta.
Decision rear_verify(double score_diff, double score_ext, const VerifierParams& params);

/// Everything rear verification needs for one question.
struct ScoredQuestion {
  std::string id;
  double score_diff = 0.0;
  double score_ext = 0.0;
  std::string span_text;
};

struct Verdict {
  std::string id;
  std::string answer_text;  // empty iff judged unanswerable
  double v = 0.0;
  double score_diff = 0.0;
  double score_ext = 0.0;
  VerifierParams params;
};

Verdict make_verdict(const ScoredQuestion& q, const VerifierParams& params);

struct VerifierGrid {
  std::vector<double> beta1 = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> beta2 = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> delta;  // default: -8 to 8 in steps of 0.5

  VerifierGrid();
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(VerifierGrid, beta1, beta2, delta)

struct TuneResult {
  VerifierParams params;
  double f1 = 0.0;           // percent
  double exact_match = 0.0;  // percent
  std::size_t evaluated = 0;
};

/// Predictions that `params` produce for the scored questions.
metrics::Predictions apply_verifier(const std::vector<ScoredQuestion>& scored,
                                    const VerifierParams& params);

/// Exhaustive grid search maximising dev F1; ties go to higher EM, then the
/// smaller delta, then the earlier grid point.
TuneResult tune_verifier(const std::vector<ScoredQuestion>& scored,
                         const std::vector<data::MrcExample>& gold, const VerifierGrid& grid);

// ---- training --------------------------------------------------------------

struct TrainReport {
  std::vector<double> losses;  // mean loss of each micro-batch
  std::size_t steps = 0;       // optimizer steps
  std::size_t epochs_run = 0;
};

TrainReport train_sketchy(SketchyReader& model, const std::vector<data::MrcExample>& examples,
                          const srl::AnnotationMap* annotations, const Vocabulary& vocab,
                          const PairLimits& limits, const ReaderTrainConfig& config,
                          std::uint64_t seed);

TrainReport train_intensive(IntensiveReader& model, const std::vector<data::MrcExample>& examples,
                            const Vocabulary& vocab, const PairLimits& limits,
                            const ReaderTrainConfig& config, std::uint64_t seed);

// ---- inference -------------------------------------------------------------

std::vector<SketchyOutput> run_sketchy(const SketchyReader& model,
                                       const std::vector<data::MrcExample>& examples,
                                       const srl::AnnotationMap* annotations,
                                       const Vocabulary& vocab, const PairLimits& limits);

/// Runs both modules over the examples (in parallel, order preserved).
std::vector<ScoredQuestion> score_questions(const SketchyReader& sketchy,
                                            const IntensiveReader& intensive,
                                            const std::vector<data::MrcExample>& examples,
                                            const srl::AnnotationMap* annotations,
                                            const Vocabulary& vocab, const PairLimits& limits,
                                            std::size_t max_answer_length);

/// One verdict per example; DataError on duplicate ids.
std::vector<Verdict> predict(const std::vector<ScoredQuestion>& scored,
                             const VerifierParams& params);

nlohmann::json verdicts_json(const std::vector<Verdict>& verdicts);

}  // namespace retrosem::reader
