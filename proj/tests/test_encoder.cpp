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

#include <cmath>
#include <random>

#include "doctest.h"
#include "retrosem/encoder.hpp"
#include "retrosem/error.hpp"
#include "retrosem/nn/gradcheck.hpp"
#include "retrosem/nn/ops.hpp"

using namespace retrosem;
using nn::Tensor;

namespace {

EncoderConfig small_config(std::size_t layers, std::size_t dim = 8) {
  EncoderConfig c;
  c.layers = layers;
  c.heads = 2;
  c.model_dim = dim;
  c.ff_dim = 2 * dim;
  c.max_position = 16;
  c.vocab_size = 12;
  return c;
}

}  // namespace

TEST_CASE("encoder output shape and config validation") {
  nn::ParameterSet params;
  std::mt19937_64 rng(1);
  Encoder enc(small_config(2), params, "enc", rng);
  for (std::size_t n : {1u, 3u, 9u}) {
    std::vector<TokenId> ids(n, 5);
    const Tensor h = enc.encode(ids, std::vector<int>(n, 0), std::vector<bool>(n, true));
    CHECK(h.shape() == nn::Shape{n, 8});
  }
  CHECK_THROWS_AS(enc.encode({12}, {0}, {true}), IndexError);
  std::vector<TokenId> too_long(17, 4);
  CHECK_THROWS_AS(enc.encode(too_long, std::vector<int>(17, 0), std::vector<bool>(17, true)),
                  IndexError);

  EncoderConfig bad = small_config(1);
  bad.heads = 3;
  nn::ParameterSet other;
  CHECK_THROWS_AS(Encoder(bad, other, "bad", rng), ConfigError);
}

TEST_CASE("padding positions do not influence real positions") {
  nn::ParameterSet params;
  std::mt19937_64 rng(2);
  Encoder enc(small_config(2), params, "enc", rng);
  const std::vector<TokenId> ids = {0, 5, 6, 1, 7, 1, 2, 2};
  const std::vector<int> seg = {0, 0, 0, 0, 1, 1, 0, 0};
  const std::vector<bool> mask = {true, true, true, true, true, true, false, false};
  const Tensor before = enc.encode(ids, seg, mask);
  auto table = params.get("enc.token_embedding").mutable_data();
  for (std::size_t c = 0; c < 8; ++c) table[Vocabulary::kPad * 8 + c] += 3.0 + c;
  const Tensor after = enc.encode(ids, seg, mask);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 8; ++c) CHECK(after.at(r, c) == doctest::Approx(before.at(r, c)).epsilon(1e-12));
  }
}

TEST_CASE("zero-depth encoder is the normalised embedding sum") {
  nn::ParameterSet params;
  std::mt19937_64 rng(3);
  Encoder enc(small_config(0), params, "enc", rng);
  const std::vector<TokenId> ids = {0, 4, 1};
  const std::vector<int> seg = {0, 1, 1};
  const Tensor h = enc.encode(ids, seg, {true, true, true});
  const auto tok = params.get("enc.token_embedding").data();
  const auto pos = params.get("enc.position_embedding").data();
  const auto sg = params.get("enc.segment_embedding").data();
  const auto gamma = params.get("enc.embedding_norm.gamma").data();
  const auto beta = params.get("enc.embedding_norm.beta").data();
  for (std::size_t r = 0; r < 3; ++r) {
    std::vector<double> e(8);
    double mu = 0.0;
    for (std::size_t c = 0; c < 8; ++c) {
      e[c] = tok[ids[r] * 8 + c] + pos[r * 8 + c] + sg[seg[r] * 8 + c];
      mu += e[c] / 8.0;
    }
    double var = 0.0;
    for (double v : e) var += (v - mu) * (v - mu) / 8.0;
    for (std::size_t c = 0; c < 8; ++c) {
      const double expected = gamma[c] * (e[c] - mu) / std::sqrt(var + 1e-12) + beta[c];
      CHECK(h.at(r, c) == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("full encoder passes the gradient check") {
  nn::ParameterSet params;
  std::mt19937_64 rng(4);
  Encoder enc(small_config(1), params, "enc", rng);
  // Larger-than-default embeddings keep layer norm away from its flat regime.
  std::normal_distribution<double> normal(0.0, 0.5);
  for (auto& name : params.names()) {
    for (double& v : params.get(name).mutable_data()) v += normal(rng);
  }
  const std::vector<TokenId> ids = {0, 4, 5, 1, 6, 1};
  const std::vector<int> seg = {0, 0, 0, 0, 1, 1};
  const std::vector<bool> mask = {true, true, true, true, true, false};
  std::vector<nn::NamedTensor> inputs;
  for (auto& name : params.names()) inputs.push_back({name, params.get(name)});
  std::vector<double> probe(6 * 8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : probe) v = u(rng);
  const Tensor weights = Tensor::from({6, 8}, probe);
  const auto report = nn::grad_check(
      [&] { return nn::sum(nn::mul(enc.encode(ids, seg, mask), weights)); }, inputs, 1e-5);
  INFO("worst " << report.worst_input << "[" << report.worst_index << "]");
  CHECK(report.max_relative_error <= 1e-4);
}

TEST_CASE("encoder is deterministic under a fixed seed") {
  auto run = [] {
    nn::ParameterSet params;
    std::mt19937_64 rng(11);
    Encoder enc(small_config(2), params, "enc", rng);
    const Tensor h = enc.encode({0, 3, 4, 1}, {0, 0, 1, 1}, {true, true, true, true});
    return std::vector<double>(h.data().begin(), h.data().end());
  };
  CHECK(run() == run());
}
