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
#include "retrosem/tokenizer.hpp"

namespace retrosem {

struct EncoderConfig {
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t model_dim = 32;
  std::size_t ff_dim = 64;
  std::size_t max_position = 512;
  std::size_t vocab_size = 0;
  std::size_t segments = 2;
  double dropout = 0.0;

  void validate() const;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EncoderConfig, layers, heads, model_dim, ff_dim,
                                                max_position, vocab_size, segments, dropout)

/// Small post-layer-norm transformer encoder with learned absolute positions.
class Encoder {
 public:
  Encoder(const EncoderConfig& config, nn::ParameterSet& params, const std::string& prefix,
          std::mt19937_64& rng);

  /// Token + position + segment embeddings, layer-normalised.
  nn::Tensor embed(const std::vector<TokenId>& ids, const std::vector<int>& segments) const;

  /// Contextual states [n x model_dim]; positions with mask[i] == false are
  /// excluded from every attention softmax.
  nn::Tensor encode(const std::vector<TokenId>& ids, const std::vector<int>& segments,
                    const std::vector<bool>& mask) const;
  nn::Tensor encode(const TokenizedPair& pair) const;

  const EncoderConfig& config() const { return config_; }
  const nn::Tensor& token_table() const { return token_embedding_; }

 private:
  struct Block {
    nn::MultiHeadSelfAttention attention;
    nn::LayerNorm attention_norm;
    nn::FeedForward feed_forward;
    nn::LayerNorm output_norm;
  };

  nn::Tensor maybe_dropout(const nn::Tensor& x) const;

  EncoderConfig config_;
  nn::Tensor token_embedding_;
  nn::Tensor position_embedding_;
  nn::Tensor segment_embedding_;
  nn::LayerNorm embedding_norm_;
  std::vector<Block> blocks_;
  mutable std::mt19937_64 dropout_rng_;
};

}  // namespace retrosem
