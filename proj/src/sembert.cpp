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

#include "retrosem/sembert.hpp"

#include "retrosem/error.hpp"
#include "retrosem/nn/ops.hpp"

namespace retrosem {

using nn::Tensor;

void SemanticConfig::validate() const {
  if (label_embedding_dim == 0 || gru_hidden == 0 || fused_dim == 0) {
    throw ConfigError("semantic: all dimensions must be >= 1");
  }
  if (m_max == 0) throw ConfigError("semantic: m_max must be >= 1");
  if (conv_width == 0 || conv_width % 2 == 0) {
    throw ConfigError("semantic: conv_width must be odd, got " + std::to_string(conv_width));
  }
}

std::vector<LabelSequence> align_frames(const std::vector<srl::SrlFrame>& question_frames,
                                        const std::vector<srl::SrlFrame>& context_frames,
                                        const TokenizedPair& pair, std::size_t m_max) {
  const std::size_t q_kept = pair.context_word_offset;
  const std::size_t c_kept = pair.context_word_count();
  auto check = [](const std::vector<srl::SrlFrame>& frames, std::size_t total, const char* side) {
    for (const auto& f : frames) {
      if (f.labels.size() != total) {
        throw DataError(std::string(side) + " frame has " + std::to_string(f.labels.size()) +
                        " labels but the text has " + std::to_string(total) + " words");
      }
    }
  };
  check(question_frames, pair.question_words_total, "question");
  check(context_frames, pair.context_words_total, "context");

  std::vector<LabelSequence> slots;
  const std::size_t used = std::max(question_frames.size(), context_frames.size());
  for (std::size_t i = 0; i < std::min(used, m_max); ++i) {
    LabelSequence seq;
    seq.reserve(q_kept + c_kept);
    if (i < question_frames.size()) {
      const auto& l = question_frames[i].labels;
      seq.insert(seq.end(), l.begin(), l.begin() + q_kept);
    } else {
      seq.insert(seq.end(), q_kept, kPadLabel);
    }
    if (i < context_frames.size()) {
      const auto& l = context_frames[i].labels;
      seq.insert(seq.end(), l.begin(), l.begin() + c_kept);
    } else {
      seq.insert(seq.end(), c_kept, kPadLabel);
    }
    slots.push_back(std::move(seq));
  }
  return slots;
}

SemanticIntegrator::SemanticIntegrator(const SemanticConfig& config, srl::LabelInventory inventory,
                                       std::size_t context_dim, nn::ParameterSet& params,
                                       const std::string& prefix, std::mt19937_64& rng)
    : config_(config), inventory_(std::move(inventory)), context_dim_(context_dim) {
  config_.validate();
  if (inventory_.tag(srl::LabelInventory::pad_id()) != kPadLabel) {
    throw ConfigError("semantic: label inventory must reserve id 0 for " + kPadLabel);
  }
  conv_ = nn::Conv1d(params, prefix + ".conv", config_.conv_width, context_dim, context_dim, rng);
  label_table_ = params.add(prefix + ".label_embedding",
                            {inventory_.size(), config_.label_embedding_dim}, nn::Init::kNormal, rng);
  const std::size_t e = config_.label_embedding_dim;
  auto row = label_table_.mutable_data().subspan(srl::LabelInventory::pad_id() * e, e);
  std::fill(row.begin(), row.end(), 0.0);
  params.freeze_row(prefix + ".label_embedding", srl::LabelInventory::pad_id());
  bigru_ = nn::BiGru(params, prefix + ".bigru", e, config_.gru_hidden, rng);
  fusion_ = nn::Linear(params, prefix + ".fusion", config_.m_max * 2 * config_.gru_hidden,
                       config_.fused_dim, rng);
}

Tensor SemanticIntegrator::subword_to_word(const Tensor& states,
                                           const std::vector<Span>& word_spans) const {
  return nn::span_max(conv_(states), word_spans);
}

std::vector<Tensor> SemanticIntegrator::embed_label_sequences(
    const std::vector<LabelSequence>& sequences, std::size_t words) const {
  if (sequences.size() > config_.m_max) {
    throw ContractError("semantic: " + std::to_string(sequences.size()) +
                        " frame slots exceed m_max=" + std::to_string(config_.m_max));
  }
  std::vector<Tensor> out;
  for (const auto& seq : sequences) {
    if (seq.size() != words) {
      throw DimensionError("semantic: label sequence of length " + std::to_string(seq.size()) +
                           " for " + std::to_string(words) + " words");
    }
    std::vector<std::size_t> ids;
    ids.reserve(seq.size());
    for (const auto& tag : seq) ids.push_back(inventory_.id(tag));
    out.push_back(nn::embedding(label_table_, ids));
  }
  const std::vector<std::size_t> pad(words, srl::LabelInventory::pad_id());
  while (out.size() < config_.m_max) out.push_back(nn::embedding(label_table_, pad));
  return out;
}

std::vector<Tensor> SemanticIntegrator::encode_labels(const std::vector<Tensor>& embedded) const {
  std::vector<Tensor> out;
  out.reserve(embedded.size());
  for (const auto& e : embedded) out.push_back(bigru_(e));
  return out;
}

Tensor SemanticIntegrator::fuse(const std::vector<Tensor>& encoded) const {
  if (encoded.size() != config_.m_max) {
    throw ContractError("semantic: fusion expects " + std::to_string(config_.m_max) +
                        " frame slots, got " + std::to_string(encoded.size()));
  }
  return fusion_(nn::concat_cols(encoded));
}

Tensor SemanticIntegrator::semantic(const std::vector<LabelSequence>& sequences,
                                    std::size_t words) const {
  return fuse(encode_labels(embed_label_sequences(sequences, words)));
}

Tensor SemanticIntegrator::integrate(const Tensor& context, const Tensor& semantic) {
  if (context.rows() != semantic.rows()) {
    throw ContractError("semantic: " + std::to_string(context.rows()) + " contextual words vs " +
                        std::to_string(semantic.rows()) + " semantic words");
  }
  return nn::concat_cols({context, semantic});
}

Tensor SemanticIntegrator::forward(const Tensor& states, const std::vector<Span>& word_spans,
                                   const std::vector<LabelSequence>& sequences) const {
  const Tensor words = subword_to_word(states, word_spans);
  return integrate(words, semantic(sequences, words.rows()));
}

}  // namespace retrosem
