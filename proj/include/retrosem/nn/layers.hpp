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

#include "retrosem/nn/ops.hpp"
#include "retrosem/nn/params.hpp"

namespace retrosem::nn {

// Layers register their weights in a caller-owned ParameterSet under a name
// prefix and keep shared handles to them.

struct Linear {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]

  Linear() = default;
  Linear(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out,
         std::mt19937_64& rng, bool with_bias = true);
  Tensor operator()(const Tensor& x) const;
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  LayerNorm() = default;
  LayerNorm(ParameterSet& params, const std::string& prefix, std::size_t dim,
            std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }
};

/// GRU cell with
///   r = sigmoid(W_r x + U_r h + b_r),  z = sigmoid(W_z x + U_z h + b_z),
///   h~ = tanh(W_h x + U_h (r * h) + b_h),  h' = (1 - z) * h + z * h~.
/// Gate weights are stored column-stacked in the order (r, z, h).
struct GruCell {
  Tensor input_weight;      // [d_in x 3h]
  Tensor recurrent_gates;   // [h x 2h] for (r, z)
  Tensor recurrent_cand;    // [h x h]
  Tensor bias;              // [3h]
  std::size_t hidden = 0;

  GruCell() = default;
  GruCell(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
          std::size_t hidden_dim, std::mt19937_64& rng);

  /// Runs the recurrence over the rows of `inputs` (in row order, or reversed)
  /// from a zero state and returns all states as [n x h], aligned with inputs.
  Tensor run(const Tensor& inputs, bool reverse) const;
};

/// Bidirectional GRU; output row t is [forward state after 0..t,
/// backward state after n-1..t].
struct BiGru {
  GruCell forward;
  GruCell backward;

  BiGru() = default;
  BiGru(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
        std::size_t hidden_dim, std::mt19937_64& rng);
  Tensor operator()(const Tensor& inputs) const;
};

struct MultiHeadSelfAttention {
  Linear query, key, value, output;
  std::size_t heads = 1;

  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(ParameterSet& params, const std::string& prefix, std::size_t dim,
                         std::size_t heads, std::mt19937_64& rng);
  /// `mask[j] == false` removes key j from every query's softmax.
  Tensor operator()(const Tensor& h, const std::vector<bool>& mask) const;
};

struct FeedForward {
  Linear inner, outer;

  FeedForward() = default;
  FeedForward(ParameterSet& params, const std::string& prefix, std::size_t dim,
              std::size_t hidden, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const { return outer(gelu(inner(x))); }
};

struct Conv1d {
  Tensor kernel;  // [width x d_in x d_out], no bias

  Conv1d() = default;
  Conv1d(ParameterSet& params, const std::string& prefix, std::size_t width, std::size_t in,
         std::size_t out, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const { return conv1d(x, kernel); }
};

}  // namespace retrosem::nn
