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
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "retrosem/nn/layers.hpp"
#include "retrosem/srl.hpp"
#include "retrosem/tokenizer.hpp"

namespace retrosem {

struct SemanticConfig {
  std::size_t label_embedding_dim = 8;
  std::size_t gru_hidden = 8;
  std::size_t m_max = 3;
  std::size_t fused_dim = 16;
  std::size_t conv_width = 3;

  void validate() const;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SemanticConfig, label_embedding_dim, gru_hidden,
                                                m_max, fused_dim, conv_width)

/// Label sequence of one frame slot, one tag per word of a tokenized pair.
using LabelSequence = std::vector<std::string>;
inline const std::string kPadLabel = "[PAD]";

/// Builds m_max slot sequences over the kept words of `pair`: slot i is the
/// i-th question frame followed by the i-th context frame, each truncated to
/// the words encode_pair kept. A side without an i-th frame contributes PAD.
/// Throws DataError when a frame's length differs from its text's word count.
std::vector<LabelSequence> align_frames(const std::vector<srl::SrlFrame>& question_frames,
                                        const std::vector<srl::SrlFrame>& context_frames,
                                        const TokenizedPair& pair, std::size_t m_max);

/// Word-level contextual states joined with a fused semantic vector per word.
class SemanticIntegrator {
 public:
  SemanticIntegrator(const SemanticConfig& config, srl::LabelInventory inventory,
                     std::size_t context_dim, nn::ParameterSet& params, const std::string& prefix,
                     std::mt19937_64& rng);

  /// conv1d over subwords, then elementwise max over each word span: [W x d_ctx].
  nn::Tensor subword_to_word(const nn::Tensor& states, const std::vector<Span>& word_spans) const;

  /// One [W x label_dim] lookup per slot, padded with PAD sequences up to
  /// m_max. More than m_max sequences is a ContractError.
  std::vector<nn::Tensor> embed_label_sequences(const std::vector<LabelSequence>& sequences,
                                                std::size_t words) const;
  /// The shared BiGRU applied to each slot independently: [W x 2h] each.
  std::vector<nn::Tensor> encode_labels(const std::vector<nn::Tensor>& embedded) const;
  /// Per word, concatenates the m_max slot vectors and maps them to d_sem.
  nn::Tensor fuse(const std::vector<nn::Tensor>& encoded) const;
  /// labels -> [W x d_sem]
  nn::Tensor semantic(const std::vector<LabelSequence>& sequences, std::size_t words) const;

  /// [W x (d_ctx + d_sem)], contextual part first.
  static nn::Tensor integrate(const nn::Tensor& context, const nn::Tensor& semantic);

  /// Full path from encoder states and slot labels to the joint representation.
  nn::Tensor forward(const nn::Tensor& states, const std::vector<Span>& word_spans,
                     const std::vector<LabelSequence>& sequences) const;

  std::size_t output_dim() const { return context_dim_ + config_.fused_dim; }
  const SemanticConfig& config() const { return config_; }
  const srl::LabelInventory& inventory() const { return inventory_; }
  const nn::Tensor& label_table() const { return label_table_; }

 private:
  SemanticConfig config_;
  srl::LabelInventory inventory_;
  std::size_t context_dim_;
  nn::Conv1d conv_;
  nn::Tensor label_table_;
  nn::BiGru bigru_;
  nn::Linear fusion_;
};

}  // namespace retrosem
