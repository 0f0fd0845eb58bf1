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

#include "retrosem/nn/layers.hpp"

#include <cmath>

#include "retrosem/error.hpp"

namespace retrosem::nn {

Linear::Linear(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out,
               std::mt19937_64& rng, bool with_bias) {
  weight = params.add(prefix + ".weight", {in, out}, Init::kFanIn, rng, in);
  if (with_bias) bias = params.add(prefix + ".bias", {out}, Init::kFanIn, rng, in);
}

Tensor Linear::operator()(const Tensor& x) const {
  Tensor y = matmul(x.dim() == 1 ? reshape(x, {1, x.size()}) : x, weight);
  return bias.defined() ? add(y, bias) : y;
}

LayerNorm::LayerNorm(ParameterSet& params, const std::string& prefix, std::size_t dim,
                     std::mt19937_64& rng) {
  gamma = params.add(prefix + ".gamma", {dim}, Init::kOnes, rng);
  beta = params.add(prefix + ".beta", {dim}, Init::kZeros, rng);
}

GruCell::GruCell(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                 std::size_t hidden_dim, std::mt19937_64& rng)
    : hidden(hidden_dim) {
  input_weight =
      params.add(prefix + ".input_weight", {input_dim, 3 * hidden_dim}, Init::kFanIn, rng);
  recurrent_gates =
      params.add(prefix + ".recurrent_gates", {hidden_dim, 2 * hidden_dim}, Init::kFanIn, rng);
  recurrent_cand =
      params.add(prefix + ".recurrent_cand", {hidden_dim, hidden_dim}, Init::kFanIn, rng);
  bias = params.add(prefix + ".bias", {3 * hidden_dim}, Init::kFanIn, rng, hidden_dim);
}

Tensor GruCell::run(const Tensor& inputs, bool reverse) const {
  const std::size_t n = inputs.rows();
  if (n == 0) throw ContractError("GRU over an empty sequence");
  const std::size_t h = hidden;
  // Input projections for all steps at once.
  const Tensor projected = add(matmul(inputs, input_weight), bias);
  Tensor state = Tensor::zeros({1, h});
  std::vector<Tensor> states(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t t = reverse ? n - 1 - k : k;
    const Tensor x = slice_rows(projected, t, t + 1);
    const Tensor gates =
        sigmoid(add(slice_cols(x, 0, 2 * h), matmul(state, recurrent_gates)));
    const Tensor r = slice_cols(gates, 0, h);
    const Tensor z = slice_cols(gates, h, 2 * h);
    const Tensor cand = tanh(add(slice_cols(x, 2 * h, 3 * h), matmul(mul(r, state), recurrent_cand)));
    // (1 - z) * h + z * h~ written as h + z * (h~ - h).
    state = add(state, mul(z, sub(cand, state)));
    states[t] = state;
  }
  return concat_rows(states);
}

BiGru::BiGru(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
             std::size_t hidden_dim, std::mt19937_64& rng)
    : forward(params, prefix + ".fwd", input_dim, hidden_dim, rng),
      backward(params, prefix + ".bwd", input_dim, hidden_dim, rng) {}

Tensor BiGru::operator()(const Tensor& inputs) const {
  return concat_cols({forward.run(inputs, false), backward.run(inputs, true)});
}

MultiHeadSelfAttention::MultiHeadSelfAttention(ParameterSet& params, const std::string& prefix,
                                               std::size_t dim, std::size_t head_count,
                                               std::mt19937_64& rng)
    : heads(head_count) {
  if (head_count == 0 || dim % head_count != 0) {
    throw ConfigError("attention: model dim " + std::to_string(dim) +
                      " not divisible by head count " + std::to_string(head_count));
  }
  query = Linear(params, prefix + ".query", dim, dim, rng);
  key = Linear(params, prefix + ".key", dim, dim, rng);
  value = Linear(params, prefix + ".value", dim, dim, rng);
  output = Linear(params, prefix + ".output", dim, dim, rng);
}

Tensor MultiHeadSelfAttention::operator()(const Tensor& h, const std::vector<bool>& mask) const {
  const std::size_t d = h.cols();
  if (d % heads != 0) {
    throw ConfigError("attention: model dim " + std::to_string(d) +
                      " not divisible by head count " + std::to_string(heads));
  }
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const Tensor q = query(h), k = key(h), v = value(h);
  std::vector<Tensor> per_head;
  per_head.reserve(heads);
  for (std::size_t a = 0; a < heads; ++a) {
    const Tensor qa = slice_cols(q, a * dh, (a + 1) * dh);
    const Tensor ka = slice_cols(k, a * dh, (a + 1) * dh);
    const Tensor va = slice_cols(v, a * dh, (a + 1) * dh);
    const Tensor weights = masked_softmax(scale(matmul(qa, transpose(ka)), inv_sqrt), mask);
    per_head.push_back(matmul(weights, va));
  }
  return output(heads == 1 ? per_head[0] : concat_cols(per_head));
}

FeedForward::FeedForward(ParameterSet& params, const std::string& prefix, std::size_t dim,
                         std::size_t hidden, std::mt19937_64& rng)
    : inner(params, prefix + ".inner", dim, hidden, rng),
      outer(params, prefix + ".outer", hidden, dim, rng) {}

Conv1d::Conv1d(ParameterSet& params, const std::string& prefix, std::size_t width,
               std::size_t in, std::size_t out, std::mt19937_64& rng) {
  if (width % 2 == 0) throw ConfigError("conv1d: kernel width must be odd, got " + std::to_string(width));
  kernel = params.add(prefix + ".kernel", {width, in, out}, Init::kFanIn, rng, width * in);
}

}  // namespace retrosem::nn
