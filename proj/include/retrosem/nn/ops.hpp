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
#include <utility>
#include <vector>

#include "retrosem/nn/tensor.hpp"

namespace retrosem::nn {

// Differentiable kernel operations. All matrices are row-major; a 1-D tensor
// of length n is accepted wherever a single row is meant.

Tensor matmul(const Tensor& a, const Tensor& b);
/// Elementwise sum; `b` may also be a 1-D row broadcast over the rows of `a`.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor gelu(const Tensor& a);

/// Softmax over the last axis.
Tensor softmax(const Tensor& a);
/// Row softmax where columns with `key_mask[c] == false` get weight exactly 0.
Tensor masked_softmax(const Tensor& a, const std::vector<bool>& key_mask);
/// Per-row normalisation followed by the affine `gamma * x + beta`.
Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta, double eps = 1e-12);

/// Rows `ids[i]` of `table`. Gradients flow only into looked-up rows.
Tensor embedding(const Tensor& table, const std::vector<std::size_t>& ids);
/// Same-padded 1-D convolution along rows; kernel shape [width x d_in x d_out].
Tensor conv1d(const Tensor& input, const Tensor& kernel);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

using Span = std::pair<std::size_t, std::size_t>;  // half-open row range
/// Elementwise max over each row span; output has one row per span.
Tensor span_max(const Tensor& a, const std::vector<Span>& spans);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

/// Mean of -log softmax(logits)[target] over rows.
Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets);
/// Cross entropy of a 1-D logit vector restricted to positions with valid[i].
Tensor masked_cross_entropy(const Tensor& logits, std::size_t target,
                            const std::vector<bool>& valid);

/// Inverted dropout. Returns `a` itself when p == 0.
Tensor dropout(const Tensor& a, double p, std::mt19937_64& rng);

}  // namespace retrosem::nn
