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

#include "retrosem/reader.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>
#include <thread>

#include "retrosem/error.hpp"
#include "retrosem/nn/checkpoint.hpp"
#include "retrosem/nn/ops.hpp"
#include "retrosem/utf8.hpp"

namespace retrosem::reader {

using nlohmann::json;
using nn::Tensor;

ReaderTrainConfig ReaderTrainConfig::sketchy_defaults() { return {}; }

ReaderTrainConfig ReaderTrainConfig::intensive_defaults() {
  ReaderTrainConfig c;
  c.kind = "intensive";
  c.learning_rate = 2e-5;
  c.batch_size = 64;
  c.gradient_accumulation_steps = 1;
  return c;
}

void ReaderTrainConfig::validate() const {
  if (kind != "sketchy" && kind != "intensive") {
    throw ConfigError("reader kind must be \"sketchy\" or \"intensive\", got \"" + kind + "\"");
  }
  if (batch_size == 0) throw ConfigError(kind + ".batch_size must be >= 1");
  if (max_answer_length == 0) throw ConfigError(kind + ".max_answer_length must be >= 1");
  optimizer().validate();
}

nn::OptimizerConfig ReaderTrainConfig::optimizer() const {
  nn::OptimizerConfig o;
  o.learning_rate = learning_rate;
  o.weight_decay = weight_decay;
  o.gradient_accumulation_steps = gradient_accumulation_steps;
  return o;
}

// ---- sketchy ---------------------------------------------------------------

SketchyReader::SketchyReader(const EncoderConfig& encoder, const SemanticConfig& semantic,
                             const srl::LabelInventory& inventory, bool use_semantics,
                             std::uint64_t seed)
    : semantic_config_(semantic), inventory_(inventory), use_semantics_(use_semantics) {
  std::mt19937_64 rng(seed);
  encoder_ = std::make_unique<Encoder>(encoder, params_, "sketchy.encoder", rng);
  std::size_t head_in = encoder.model_dim;
  if (use_semantics_) {
    integrator_ = std::make_unique<SemanticIntegrator>(semantic, inventory_, encoder.model_dim,
                                                       params_, "sketchy.semantic", rng);
    head_in = integrator_->output_dim();
  }
  head_ = nn::Linear(params_, "sketchy.head", head_in, 2, rng);
}

Tensor SketchyReader::logits(const data::EncodedExample& example) const {
  const Tensor h = encoder_->encode(example.pair);
  if (!use_semantics_) return head_(nn::slice_rows(h, 0, 1));
  if (example.frame_slots.empty()) {
    throw DataError("sketchy: example has no SRL frames; annotate the dataset first");
  }
  const Tensor joint = integrator_->forward(h, example.pair.word_spans, example.frame_slots);
  return head_(nn::slice_rows(joint, 0, 1));
}

SketchyOutput SketchyReader::forward(const data::EncodedExample& example) const {
  nn::NoGradGuard guard;
  const Tensor l = logits(example);
  return {l.at(0), l.at(1)};
}

Tensor SketchyReader::loss(const data::EncodedExample& example, bool is_impossible) const {
  return nn::cross_entropy(logits(example), {is_impossible ? 1u : 0u});
}

void SketchyReader::save(const std::filesystem::path& path) const {
  json meta = {{"kind", "sketchy-reader"},
               {"encoder", encoder_->config()},
               {"semantic", semantic_config_},
               {"roles", inventory_.roles()},
               {"use_semantics", use_semantics_}};
  nn::save_checkpoint(path, params_, meta);
}

std::unique_ptr<SketchyReader> SketchyReader::load(const std::filesystem::path& path) {
  const nn::Checkpoint ck = nn::read_checkpoint(path);
  if (ck.meta.value("kind", "") != "sketchy-reader") {
    throw DataError(path.string() + " is not a sketchy reader checkpoint");
  }
  auto model = std::make_unique<SketchyReader>(
      ck.meta.at("encoder").get<EncoderConfig>(), ck.meta.at("semantic").get<SemanticConfig>(),
      srl::LabelInventory(ck.meta.at("roles").get<std::vector<std::string>>()),
      ck.meta.at("use_semantics").get<bool>(), 0);
  nn::load_into(ck, model->params_);
  return model;
}

// ---- intensive -------------------------------------------------------------

std::pair<std::size_t, std::size_t> best_span(const std::vector<double>& start_logits,
                                              const std::vector<double>& end_logits,
                                              const std::vector<bool>& valid,
                                              std::size_t max_answer_length) {
  const std::size_t n = start_logits.size();
  if (end_logits.size() != n || valid.size() != n) {
    throw DimensionError("best_span: logits and mask lengths differ");
  }
  if (max_answer_length == 0) throw ConfigError("best_span: max_answer_length must be >= 1");
  bool found = false;
  double best = 0.0;
  std::pair<std::size_t, std::size_t> arg{0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    for (std::size_t j = i; j < n && j - i < max_answer_length; ++j) {
      if (!valid[j]) continue;
      const double s = start_logits[i] + end_logits[j];
      if (!found || s > best) {
        found = true;
        best = s;
        arg = {i, j};
      }
    }
  }
  if (!found) throw ContractError("best_span: no valid position");
  return arg;
}

IntensiveOutput score_spans(std::vector<double> start_logits, std::vector<double> end_logits,
                            const TokenizedPair& pair, std::size_t max_answer_length) {
  IntensiveOutput out;
  out.span = best_span(start_logits, end_logits, pair.context_mask(), max_answer_length);
  out.score_has = start_logits[out.span.first] + end_logits[out.span.second];
  out.score_null = start_logits[0] + end_logits[0];
  out.score_diff = out.score_null - out.score_has;
  out.start_logits = std::move(start_logits);
  out.end_logits = std::move(end_logits);
  return out;
}

std::pair<std::size_t, std::size_t> span_targets(const data::MrcExample& example,
                                                 const TokenizedPair& pair) {
  if (example.is_impossible || example.answers.empty() || example.flagged) return {0, 0};
  const auto& ans = example.answers.front();
  const std::size_t begin = ans.answer_start;
  const std::size_t end = begin + utf8::length(ans.text);
  std::optional<std::size_t> first, last;
  for (std::size_t w = 0; w < pair.context_char_spans.size(); ++w) {
    const auto [cb, ce] = pair.context_char_spans[w];
    if (ce > begin && cb < end) {
      if (!first) first = w;
      last = w;
    }
  }
  if (!first) return {0, 0};
  // The answer runs past the kept context: no reachable target.
  if (pair.context_char_spans[*last].second < end && pair.context_truncated() &&
      *last + 1 == pair.context_char_spans.size()) {
    return {0, 0};
  }
  const std::size_t off = pair.context_word_offset;
  return {pair.word_spans[off + *first].first, pair.word_spans[off + *last].second - 1};
}

std::string span_text(const data::MrcExample& example, const TokenizedPair& pair,
                      std::pair<std::size_t, std::size_t> span) {
  const std::size_t off = pair.context_word_offset;
  std::optional<std::size_t> wi, wj;
  for (std::size_t w = 0; w < pair.context_char_spans.size(); ++w) {
    const auto [b, e] = pair.word_spans[off + w];
    if (span.first >= b && span.first < e) wi = w;
    if (span.second >= b && span.second < e) wj = w;
  }
  if (!wi || !wj || *wj < *wi) throw ContractError("span_text: span outside the context");
  const std::size_t cb = pair.context_char_spans[*wi].first;
  const std::size_t ce = pair.context_char_spans[*wj].second;
  return utf8::substr(example.context, cb, ce - cb);
}

IntensiveReader::IntensiveReader(const EncoderConfig& encoder, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  encoder_ = std::make_unique<Encoder>(encoder, params_, "intensive.encoder", rng);
  span_head_ = nn::Linear(params_, "intensive.span_head", encoder.model_dim, 2, rng);
}

Tensor IntensiveReader::logits(const TokenizedPair& pair) const {
  return span_head_(encoder_->encode(pair));
}

IntensiveOutput IntensiveReader::forward(const TokenizedPair& pair,
                                         std::size_t max_answer_length) const {
  nn::NoGradGuard guard;
  const Tensor l = logits(pair);
  std::vector<double> start(l.rows()), end(l.rows());
  for (std::size_t i = 0; i < l.rows(); ++i) {
    start[i] = l.at(i, 0);
    end[i] = l.at(i, 1);
  }
  return score_spans(std::move(start), std::move(end), pair, max_answer_length);
}

Tensor IntensiveReader::loss(const TokenizedPair& pair,
                             std::pair<std::size_t, std::size_t> target) const {
  const Tensor l = logits(pair);
  const std::size_t n = l.rows();
  std::vector<bool> valid = pair.context_mask();
  valid[0] = true;
  const Tensor start = nn::reshape(nn::slice_cols(l, 0, 1), {n});
  const Tensor end = nn::reshape(nn::slice_cols(l, 1, 2), {n});
  return nn::add(nn::masked_cross_entropy(start, target.first, valid),
                 nn::masked_cross_entropy(end, target.second, valid));
}

void IntensiveReader::save(const std::filesystem::path& path) const {
  nn::save_checkpoint(path, params_, {{"kind", "intensive-reader"}, {"encoder", encoder_->config()}});
}

std::unique_ptr<IntensiveReader> IntensiveReader::load(const std::filesystem::path& path) {
  const nn::Checkpoint ck = nn::read_checkpoint(path);
  if (ck.meta.value("kind", "") != "intensive-reader") {
    throw DataError(path.string() + " is not an intensive reader checkpoint");
  }
  auto model = std::make_unique<IntensiveReader>(ck.meta.at("encoder").get<EncoderConfig>(), 0);
  nn::load_into(ck, model->params_);
  return model;
}

// ---- verification ----------------------------------------------------------

Decision rear_verify(double score_diff, double score_ext, const VerifierParams& params) {
  if (!std::isfinite(score_diff) || !std::isfinite(score_ext)) {
    throw NumericDomainError("rear_verify: non-finite score (score_diff=" +
                             std::to_string(score_diff) + ", score_ext=" +
                             std::to_string(score_ext) + ")");
  }
  const double v = params.beta1 * score_diff + params.beta2 * score_ext;
  return {v, v > params.delta};
}

Verdict make_verdict(const ScoredQuestion& q, const VerifierParams& params) {
  const Decision d = rear_verify(q.score_diff, q.score_ext, params);
  return {q.id, d.unanswerable ? std::string() : q.span_text, d.v, q.score_diff, q.score_ext,
          params};
}

VerifierGrid::VerifierGrid() {
  for (int k = -16; k <= 16; ++k) delta.push_back(0.5 * k);
}

metrics::Predictions apply_verifier(const std::vector<ScoredQuestion>& scored,
                                    const VerifierParams& params) {
  metrics::Predictions out;
  for (const auto& q : scored) out[q.id] = make_verdict(q, params).answer_text;
  return out;
}

TuneResult tune_verifier(const std::vector<ScoredQuestion>& scored,
                         const std::vector<data::MrcExample>& gold, const VerifierGrid& grid) {
  if (grid.beta1.empty() || grid.beta2.empty() || grid.delta.empty()) {
    throw ConfigError("tune_verifier: every grid axis needs at least one value");
  }
  if (scored.empty()) throw InputError("tune_verifier: empty dev set");
  TuneResult best;
  bool have = false;
  for (double b1 : grid.beta1) {
    for (double b2 : grid.beta2) {
      for (double d : grid.delta) {
        const VerifierParams p{b1, b2, d};
        const auto report = metrics::evaluate_predictions(apply_verifier(scored, p), gold);
        ++best.evaluated;
        const bool better =
            !have || report.f1 > best.f1 ||
            (report.f1 == best.f1 &&
             (report.exact_match > best.exact_match ||
              (report.exact_match == best.exact_match && d < best.params.delta)));
        if (better) {
          have = true;
          best.params = p;
          best.f1 = report.f1;
          best.exact_match = report.exact_match;
        }
      }
    }
  }
  return best;
}

// ---- training --------------------------------------------------------------

namespace {

template <typename LossFn>
TrainReport train_loop(nn::ParameterSet& params, const std::vector<data::MrcExample>& examples,
                       const srl::AnnotationMap* annotations, std::size_t m_max,
                       const Vocabulary& vocab, const PairLimits& limits,
                       const ReaderTrainConfig& config, std::uint64_t seed, LossFn&& loss_fn) {
  config.validate();
  TrainReport report;
  if (config.epochs == 0) return report;
  if (examples.empty()) throw InputError(config.kind + ": empty training set");
  params.zero_grad();
  nn::GradientAccumulator acc(params, config.optimizer());
  auto done = [&] { return config.max_steps > 0 && acc.steps_taken() >= config.max_steps; };
  for (std::size_t epoch = 0; epoch < config.epochs && !done(); ++epoch) {
    const auto batches = data::make_batches(examples, vocab, limits, config.batch_size,
                                            seed + epoch, annotations, m_max);
    for (const auto& batch : batches) {
      std::vector<Tensor> losses;
      for (const auto& item : batch.items) losses.push_back(loss_fn(item, examples[item.index]));
      const Tensor mean = nn::scale(nn::sum(nn::concat_rows(losses)),
                                    1.0 / static_cast<double>(losses.size()));
      mean.backward();
      report.losses.push_back(mean.item());
      acc.micro_step_done();
      if (done()) break;
    }
    if (!done()) acc.flush();
    ++report.epochs_run;
  }
  report.steps = acc.steps_taken();
  return report;
}

}  // namespace

TrainReport train_sketchy(SketchyReader& model, const std::vector<data::MrcExample>& examples,
                          const srl::AnnotationMap* annotations, const Vocabulary& vocab,
                          const PairLimits& limits, const ReaderTrainConfig& config,
                          std::uint64_t seed) {
  if (model.uses_semantics() && annotations == nullptr) {
    throw DataError("train-sketchy: the semantic sketchy module requires SRL annotations");
  }
  return train_loop(model.params(), examples, model.uses_semantics() ? annotations : nullptr,
                    model.m_max(), vocab, limits, config, seed,
                    [&](const data::EncodedExample& item, const data::MrcExample& ex) {
                      return nn::reshape(model.loss(item, ex.is_impossible), {1});
                    });
}

TrainReport train_intensive(IntensiveReader& model, const std::vector<data::MrcExample>& examples,
                            const Vocabulary& vocab, const PairLimits& limits,
                            const ReaderTrainConfig& config, std::uint64_t seed) {
  return train_loop(model.params(), examples, nullptr, 1, vocab, limits, config, seed,
                    [&](const data::EncodedExample& item, const data::MrcExample& ex) {
                      return nn::reshape(model.loss(item.pair, span_targets(ex, item.pair)), {1});
                    });
}

// ---- inference -------------------------------------------------------------

namespace {

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    }));
  }
  for (auto& j : jobs) j.get();
}

}  // namespace

std::vector<SketchyOutput> run_sketchy(const SketchyReader& model,
                                       const std::vector<data::MrcExample>& examples,
                                       const srl::AnnotationMap* annotations,
                                       const Vocabulary& vocab, const PairLimits& limits) {
  if (model.uses_semantics() && annotations == nullptr) {
    throw DataError("sketchy: the semantic sketchy module requires SRL annotations");
  }
  std::vector<SketchyOutput> out(examples.size());
  parallel_for(examples.size(), [&](std::size_t i) {
    const auto item = data::encode_example(examples[i], i, vocab, limits,
                                           model.uses_semantics() ? annotations : nullptr,
                                           model.m_max());
    out[i] = model.forward(item);
  });
  return out;
}

std::vector<ScoredQuestion> score_questions(const SketchyReader& sketchy,
                                            const IntensiveReader& intensive,
                                            const std::vector<data::MrcExample>& examples,
                                            const srl::AnnotationMap* annotations,
                                            const Vocabulary& vocab, const PairLimits& limits,
                                            std::size_t max_answer_length) {
  const auto sk = run_sketchy(sketchy, examples, annotations, vocab, limits);
  std::vector<ScoredQuestion> out(examples.size());
  parallel_for(examples.size(), [&](std::size_t i) {
    const auto& ex = examples[i];
    const TokenizedPair pair = encode_pair(ex.question, ex.context, vocab, limits);
    const IntensiveOutput io = intensive.forward(pair, max_answer_length);
    out[i] = {ex.id, io.score_diff, sk[i].score_ext(), span_text(ex, pair, io.span)};
  });
  return out;
}

std::vector<Verdict> predict(const std::vector<ScoredQuestion>& scored,
                             const VerifierParams& params) {
  std::set<std::string> ids;
  std::vector<Verdict> out;
  out.reserve(scored.size());
  for (const auto& q : scored) {
    if (!ids.insert(q.id).second) throw DataError("predict: duplicate id '" + q.id + "'");
    out.push_back(make_verdict(q, params));
  }
  return out;
}

json verdicts_json(const std::vector<Verdict>& verdicts) {
  json arr = json::array();
  for (const auto& v : verdicts) {
    arr.push_back({{"id", v.id},
                   {"answer", v.answer_text},
                   {"v", v.v},
                   {"score_diff", v.score_diff},
                   {"score_ext", v.score_ext},
                   {"beta1", v.params.beta1},
                   {"beta2", v.params.beta2},
                   {"delta", v.params.delta}});
  }
  return arr;
}

}  // namespace retrosem::reader
