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

#include "retrosem/encoder.hpp"

#include "retrosem/error.hpp"

namespace retrosem {

using nn::Tensor;

void EncoderConfig::validate() const {
  if (heads == 0 || model_dim == 0 || model_dim % heads != 0) {
    throw ConfigError("encoder: model_dim " + std::to_string(model_dim) +
                      " must be a positive multiple of heads " + std::to_string(heads));
  }
  if (ff_dim == 0) throw ConfigError("encoder: ff_dim must be >= 1");
  if (vocab_size == 0) throw ConfigError("encoder: vocab_size must be set");
  if (max_position == 0) throw ConfigError("encoder: max_position must be >= 1");
  if (segments == 0) throw ConfigError("encoder: segments must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("encoder: dropout must lie in [0, 1)");
}

Encoder::Encoder(const EncoderConfig& config, nn::ParameterSet& params, const std::string& prefix,
                 std::mt19937_64& rng)
    : config_(config), dropout_rng_(rng()) {
  config_.validate();
  const std::size_t d = config_.model_dim;
  token_embedding_ =
      params.add(prefix + ".token_embedding", {config_.vocab_size, d}, nn::Init::kNormal, rng);
  position_embedding_ =
      params.add(prefix + ".position_embedding", {config_.max_position, d}, nn::Init::kNormal, rng);
  segment_embedding_ =
      params.add(prefix + ".segment_embedding", {config_.segments, d}, nn::Init::kNormal, rng);
  embedding_norm_ = nn::LayerNorm(params, prefix + ".embedding_norm", d, rng);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    blocks_.push_back(Block{
        nn::MultiHeadSelfAttention(params, p + ".attention", d, config_.heads, rng),
        nn::LayerNorm(params, p + ".attention_norm", d, rng),
        nn::FeedForward(params, p + ".feed_forward", d, config_.ff_dim, rng),
        nn::LayerNorm(params, p + ".output_norm", d, rng),
    });
  }
}

Tensor Encoder::maybe_dropout(const Tensor& x) const {
  if (config_.dropout <= 0.0 || !nn::grad_enabled()) return x;
  return nn::dropout(x, config_.dropout, dropout_rng_);
}

Tensor Encoder::embed(const std::vector<TokenId>& ids, const std::vector<int>& segments) const {
  const std::size_t n = ids.size();
  if (segments.size() != n) {
    throw DimensionError("encoder: " + std::to_string(segments.size()) + " segment ids for " +
                         std::to_string(n) + " tokens");
  }
  if (n == 0) throw InputError("encoder: empty input");
  if (n > config_.max_position) {
    throw IndexError("encoder: position " + std::to_string(n - 1) + " out of range [0, " +
                     std::to_string(config_.max_position) + ")");
  }
  std::vector<std::size_t> positions(n), segs(n);
  for (std::size_t i = 0; i < n; ++i) {
    positions[i] = i;
    if (segments[i] < 0) throw IndexError("encoder: negative segment id");
    segs[i] = static_cast<std::size_t>(segments[i]);
  }
  Tensor x = nn::add(nn::embedding(token_embedding_, ids), nn::embedding(position_embedding_, positions));
  x = nn::add(x, nn::embedding(segment_embedding_, segs));
  return maybe_dropout(embedding_norm_(x));
}

Tensor Encoder::encode(const std::vector<TokenId>& ids, const std::vector<int>& segments,
                       const std::vector<bool>& mask) const {
  if (mask.size() != ids.size()) {
    throw DimensionError("encoder: mask length " + std::to_string(mask.size()) + " for " +
                         std::to_string(ids.size()) + " tokens");
  }
  Tensor h = embed(ids, segments);
  for (const Block& block : blocks_) {
    h = block.attention_norm(nn::add(h, maybe_dropout(block.attention(h, mask))));
    h = block.output_norm(nn::add(h, maybe_dropout(block.feed_forward(h))));
  }
  return h;
}

Tensor Encoder::encode(const TokenizedPair& pair) const {
  return encode(pair.subword_ids, pair.segment_ids, pair.attention_mask);
}

}  // namespace retrosem
