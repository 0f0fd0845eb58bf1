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

#include "retrosem/gradsuite.hpp"

#include <functional>
#include <random>
#include <utility>

#include "retrosem/data.hpp"
#include "retrosem/encoder.hpp"
#include "retrosem/nn/layers.hpp"
#include "retrosem/nn/ops.hpp"
#include "retrosem/reader.hpp"
#include "retrosem/sembert.hpp"

namespace retrosem {

namespace {

using nn::NamedTensor;
using nn::Shape;
using nn::Tensor;
using Rng = std::mt19937_64;

Tensor uniform(const Shape& shape, Rng& rng, bool requires_grad = true, double lo = -1.0,
               double hi = 1.0) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return Tensor::from(shape, std::move(v), requires_grad);
}

// Random linear functional so every output coordinate reaches the loss.
Tensor weighted(const Tensor& out, const Tensor& probe) { return nn::sum(nn::mul(out, probe)); }

std::vector<NamedTensor> all_params(const nn::ParameterSet& params) {
  std::vector<NamedTensor> out;
  for (const auto& name : params.names()) out.push_back({name, params.get(name)});
  return out;
}

void jitter(nn::ParameterSet& params, Rng& rng, double spread) {
  std::uniform_real_distribution<double> u(-spread, spread);
  for (auto& t : params.tensors()) {
    for (double& v : t.mutable_data()) v += u(rng);
  }
}

using Check = std::function<nn::GradCheckReport(Rng&)>;

struct Entry {
  std::string name;
  bool composite;
  Check run;
};

nn::GradCheckReport unary(Rng& rng, const Shape& shape, Tensor (*op)(const Tensor&)) {
  const Tensor a = uniform(shape, rng);
  const Tensor probe = uniform(shape, rng, false);
  return nn::grad_check([&] { return weighted(op(a), probe); }, {{"a", a}});
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      {"matmul", false,
       [](Rng& rng) {
         const Tensor a = uniform({3, 5}, rng), b = uniform({5, 4}, rng);
         const Tensor p = uniform({3, 4}, rng, false);
         return nn::grad_check([&] { return weighted(nn::matmul(a, b), p); }, {{"a", a}, {"b", b}});
       }},
      {"add", false,
       [](Rng& rng) {
         const Tensor a = uniform({3, 4}, rng), b = uniform({3, 4}, rng);
         const Tensor p = uniform({3, 4}, rng, false);
         return nn::grad_check([&] { return weighted(nn::add(a, b), p); }, {{"a", a}, {"b", b}});
       }},
      {"add_row_broadcast", false,
       [](Rng& rng) {
         const Tensor a = uniform({5, 4}, rng), b = uniform({4}, rng);
         const Tensor p = uniform({5, 4}, rng, false);
         return nn::grad_check([&] { return weighted(nn::add(a, b), p); }, {{"a", a}, {"b", b}});
       }},
      {"sub", false,
       [](Rng& rng) {
         const Tensor a = uniform({3, 4}, rng), b = uniform({3, 4}, rng);
         const Tensor p = uniform({3, 4}, rng, false);
         return nn::grad_check([&] { return weighted(nn::sub(a, b), p); }, {{"a", a}, {"b", b}});
       }},
      {"mul", false,
       [](Rng& rng) {
         const Tensor a = uniform({3, 4}, rng), b = uniform({3, 4}, rng);
         const Tensor p = uniform({3, 4}, rng, false);
         return nn::grad_check([&] { return weighted(nn::mul(a, b), p); }, {{"a", a}, {"b", b}});
       }},
      {"scale", false,
       [](Rng& rng) {
         const Tensor a = uniform({4, 3}, rng);
         const Tensor p = uniform({4, 3}, rng, false);
         return nn::grad_check([&] { return weighted(nn::scale(a, -1.7), p); }, {{"a", a}});
       }},
      {"sigmoid", false, [](Rng& rng) { return unary(rng, {4, 5}, nn::sigmoid); }},
      {"tanh", false, [](Rng& rng) { return unary(rng, {4, 5}, nn::tanh); }},
      {"gelu", false, [](Rng& rng) { return unary(rng, {4, 5}, nn::gelu); }},
      {"softmax", false, [](Rng& rng) { return unary(rng, {3, 6}, nn::softmax); }},
      {"masked_softmax", false,
       [](Rng& rng) {
         const Tensor a = uniform({4, 6}, rng);
         const Tensor p = uniform({4, 6}, rng, false);
         const std::vector<bool> mask = {true, false, true, true, false, true};
         return nn::grad_check([&] { return weighted(nn::masked_softmax(a, mask), p); },
                               {{"a", a}});
       }},
      {"layer_norm", false,
       [](Rng& rng) {
         const Tensor a = uniform({3, 8}, rng), g = uniform({8}, rng), b = uniform({8}, rng);
         const Tensor p = uniform({3, 8}, rng, false);
         return nn::grad_check([&] { return weighted(nn::layer_norm(a, g, b), p); },
                               {{"a", a}, {"gamma", g}, {"beta", b}});
       }},
      {"embedding", false,
       [](Rng& rng) {
         const Tensor table = uniform({6, 4}, rng);
         const Tensor p = uniform({5, 4}, rng, false);
         const std::vector<std::size_t> ids = {1, 1, 4, 0, 1};
         return nn::grad_check([&] { return weighted(nn::embedding(table, ids), p); },
                               {{"table", table}});
       }},
      {"conv1d", false,
       [](Rng& rng) {
         const Tensor x = uniform({6, 3}, rng), k = uniform({3, 3, 4}, rng);
         const Tensor p = uniform({6, 4}, rng, false);
         return nn::grad_check([&] { return weighted(nn::conv1d(x, k), p); },
                               {{"input", x}, {"kernel", k}});
       }},
      {"concat_cols", false,
       [](Rng& rng) {
         const Tensor a = uniform({3, 2}, rng), b = uniform({3, 4}, rng);
         const Tensor p = uniform({3, 6}, rng, false);
         return nn::grad_check([&] { return weighted(nn::concat_cols({a, b}), p); },
                               {{"a", a}, {"b", b}});
       }},
      {"concat_rows", false,
       [](Rng& rng) {
         const Tensor a = uniform({2, 3}, rng), b = uniform({4, 3}, rng);
         const Tensor p = uniform({6, 3}, rng, false);
         return nn::grad_check([&] { return weighted(nn::concat_rows({a, b}), p); },
                               {{"a", a}, {"b", b}});
       }},
      {"slice_rows", false,
       [](Rng& rng) {
         const Tensor a = uniform({6, 3}, rng);
         const Tensor p = uniform({3, 3}, rng, false);
         return nn::grad_check([&] { return weighted(nn::slice_rows(a, 2, 5), p); }, {{"a", a}});
       }},
      {"slice_cols", false,
       [](Rng& rng) {
         const Tensor a = uniform({3, 6}, rng);
         const Tensor p = uniform({3, 2}, rng, false);
         return nn::grad_check([&] { return weighted(nn::slice_cols(a, 1, 3), p); }, {{"a", a}});
       }},
      {"transpose", false, [](Rng& rng) {
         const Tensor a = uniform({3, 5}, rng);
         const Tensor p = uniform({5, 3}, rng, false);
         return nn::grad_check([&] { return weighted(nn::transpose(a), p); }, {{"a", a}});
       }},
      {"reshape", false,
       [](Rng& rng) {
         const Tensor a = uniform({4, 3}, rng);
         const Tensor p = uniform({2, 6}, rng, false);
         return nn::grad_check([&] { return weighted(nn::reshape(a, {2, 6}), p); }, {{"a", a}});
       }},
      {"span_max", false,
       [](Rng& rng) {
         const Tensor a = uniform({7, 3}, rng);
         const Tensor p = uniform({3, 3}, rng, false);
         const std::vector<nn::Span> spans = {{0, 1}, {1, 4}, {4, 7}};
         return nn::grad_check([&] { return weighted(nn::span_max(a, spans), p); }, {{"a", a}});
       }},
      {"sum", false,
       [](Rng& rng) {
         const Tensor a = uniform({3, 4}, rng);
         return nn::grad_check([&] { return nn::sum(nn::mul(a, a)); }, {{"a", a}});
       }},
      {"mean", false,
       [](Rng& rng) {
         const Tensor a = uniform({3, 4}, rng);
         return nn::grad_check([&] { return nn::mean(nn::mul(a, a)); }, {{"a", a}});
       }},
      {"cross_entropy", false,
       [](Rng& rng) {
         const Tensor a = uniform({4, 5}, rng, true, -2.0, 2.0);
         std::vector<std::size_t> targets(4);
         for (auto& t : targets) t = rng() % 5;
         return nn::grad_check([&] { return nn::cross_entropy(a, targets); }, {{"logits", a}});
       }},
      {"masked_cross_entropy", false,
       [](Rng& rng) {
         const Tensor a = uniform({7}, rng, true, -2.0, 2.0);
         const std::vector<bool> valid = {true, false, false, true, true, true, false};
         const std::size_t target = 3 + rng() % 3;
         return nn::grad_check([&] { return nn::masked_cross_entropy(a, target, valid); },
                               {{"logits", a}});
       }},
      {"dropout", false,
       [](Rng& rng) {
         const Tensor a = uniform({4, 5}, rng);
         const Tensor p = uniform({4, 5}, rng, false);
         const std::uint64_t mask_seed = rng();
         return nn::grad_check(
             [&] {
               Rng local(mask_seed);  // same mask on every evaluation
               return weighted(nn::dropout(a, 0.3, local), p);
             },
             {{"a", a}});
       }},
      {"linear", true,
       [](Rng& rng) {
         nn::ParameterSet params;
         nn::Linear lin(params, "lin", 5, 3, rng);
         jitter(params, rng, 0.5);
         const Tensor x = uniform({4, 5}, rng);
         const Tensor p = uniform({4, 3}, rng, false);
         auto inputs = all_params(params);
         inputs.push_back({"x", x});
         return nn::grad_check([&] { return weighted(lin(x), p); }, inputs);
       }},
      {"gru_cell", true,
       [](Rng& rng) {
         nn::ParameterSet params;
         nn::GruCell cell(params, "gru", 3, 4, rng);
         jitter(params, rng, 0.5);
         const Tensor x = uniform({5, 3}, rng);
         const Tensor p = uniform({5, 4}, rng, false);
         auto inputs = all_params(params);
         inputs.push_back({"x", x});
         return nn::grad_check([&] { return weighted(cell.run(x, false), p); }, inputs);
       }},
      {"bigru", true,
       [](Rng& rng) {
         nn::ParameterSet params;
         nn::BiGru gru(params, "bigru", 3, 4, rng);
         jitter(params, rng, 0.5);
         const Tensor x = uniform({5, 3}, rng);
         const Tensor p = uniform({5, 8}, rng, false);
         auto inputs = all_params(params);
         inputs.push_back({"x", x});
         return nn::grad_check([&] { return weighted(gru(x), p); }, inputs);
       }},
      {"self_attention", true,
       [](Rng& rng) {
         nn::ParameterSet params;
         nn::MultiHeadSelfAttention att(params, "att", 8, 2, rng);
         jitter(params, rng, 0.3);
         const Tensor h = uniform({5, 8}, rng);
         const Tensor p = uniform({5, 8}, rng, false);
         const std::vector<bool> mask = {true, true, true, false, true};
         auto inputs = all_params(params);
         inputs.push_back({"h", h});
         return nn::grad_check([&] { return weighted(att(h, mask), p); }, inputs);
       }},
      {"feed_forward", true,
       [](Rng& rng) {
         nn::ParameterSet params;
         nn::FeedForward ff(params, "ff", 4, 8, rng);
         jitter(params, rng, 0.5);
         const Tensor x = uniform({3, 4}, rng);
         const Tensor p = uniform({3, 4}, rng, false);
         auto inputs = all_params(params);
         inputs.push_back({"x", x});
         return nn::grad_check([&] { return weighted(ff(x), p); }, inputs);
       }},
      {"encoder_block", true,
       [](Rng& rng) {
         EncoderConfig c;
         c.layers = 1;
         c.heads = 2;
         c.model_dim = 8;
         c.ff_dim = 8;
         c.max_position = 8;
         c.vocab_size = 8;
         nn::ParameterSet params;
         Encoder enc(c, params, "enc", rng);
         // Layer norm is flat around tiny embeddings; spread them out.
         jitter(params, rng, 0.8);
         const std::vector<TokenId> ids = {0, 4, 5, 1, 6, 1};
         const std::vector<int> seg = {0, 0, 0, 0, 1, 1};
         const std::vector<bool> mask = {true, true, true, true, true, false};
         const Tensor p = uniform({6, 8}, rng, false);
         return nn::grad_check([&] { return weighted(enc.encode(ids, seg, mask), p); },
                               all_params(params));
       }},
      {"semantic_fusion", true,
       [](Rng& rng) {
         SemanticConfig sc;
         sc.label_embedding_dim = 3;
         sc.gru_hidden = 2;
         sc.m_max = 2;
         sc.fused_dim = 4;
         nn::ParameterSet params;
         SemanticIntegrator sem(sc, srl::LabelInventory(), 3, params, "sem", rng);
         const Tensor h = uniform({5, 3}, rng);
         const std::vector<nn::Span> spans = {{0, 1}, {1, 3}, {3, 5}};
         const std::vector<LabelSequence> labels = {{"B-ARG0", "B-PRED", "B-ARG1"},
                                                    {"O", "B-PRED", "[PAD]"}};
         const Tensor p = uniform({3, 7}, rng, false);
         auto inputs = all_params(params);
         inputs.push_back({"states", h});
         return nn::grad_check([&] { return weighted(sem.forward(h, spans, labels), p); }, inputs);
       }},
      {"sketchy_head", true,
       [](Rng& rng) {
         data::FixtureConfig fc;
         fc.size = 2;
         fc.context_words = 3;
         fc.vocab_size = 12;
         fc.seed = rng();
         const data::Fixture fx = data::gen_fixture(fc);
         const Vocabulary vocab = build_vocab({fx.examples[0].question, fx.examples[0].context}, 1, 64);
         EncoderConfig ec;
         ec.layers = 1;
         ec.heads = 2;
         ec.model_dim = 4;
         ec.ff_dim = 4;
         ec.max_position = 16;
         ec.vocab_size = vocab.size();
         SemanticConfig sc;
         sc.label_embedding_dim = 2;
         sc.gru_hidden = 2;
         sc.m_max = 2;
         sc.fused_dim = 3;
         reader::SketchyReader model(ec, sc, srl::LabelInventory(), true, rng());
         jitter(model.params(), rng, 0.5);
         const auto& ex = fx.examples[0];
         const auto item = data::encode_example(ex, 0, vocab, {}, &fx.annotations, sc.m_max);
         return nn::grad_check([&] { return model.loss(item, ex.is_impossible); },
                               all_params(model.params()));
       }},
      {"intensive_head", true,
       [](Rng& rng) {
         const Vocabulary vocab = build_vocab({"ai ở đâu", "nhà ở gần sông lớn"}, 1, 64);
         EncoderConfig ec;
         ec.layers = 1;
         ec.heads = 2;
         ec.model_dim = 4;
         ec.ff_dim = 4;
         ec.max_position = 16;
         ec.vocab_size = vocab.size();
         reader::IntensiveReader model(ec, rng());
         jitter(model.params(), rng, 0.5);
         const TokenizedPair pair = encode_pair("ai ở đâu", "nhà ở gần sông lớn", vocab, {});
         const std::size_t first = pair.word_spans[pair.context_word_offset].first;
         const std::pair<std::size_t, std::size_t> target = {first + 1 + rng() % 2, first + 3};
         return nn::grad_check([&] { return model.loss(pair, target); },
                               all_params(model.params()));
       }},
  };
  return entries;
}

}  // namespace

std::vector<std::string> grad_suite_names() {
  std::vector<std::string> out;
  for (const auto& e : registry()) out.push_back(e.name);
  return out;
}

std::vector<GradSuiteResult> run_grad_suite(const std::vector<std::uint64_t>& seeds,
                                            const std::string& filter) {
  std::vector<GradSuiteResult> out;
  for (const auto& e : registry()) {
    if (!filter.empty() && e.name.find(filter) == std::string::npos) continue;
    GradSuiteResult r{e.name, e.composite, {}};
    for (auto seed : seeds) {
      Rng rng(seed);
      r.report.merge(e.run(rng));
    }
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::json grad_suite_json(const std::vector<GradSuiteResult>& results, double tolerance) {
  nlohmann::json checks = nlohmann::json::array();
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed(tolerance);
    checks.push_back({{"name", r.name},
                      {"kind", r.composite ? "composite" : "op"},
                      {"max_relative_error", r.report.max_relative_error},
                      {"worst_input", r.report.worst_input},
                      {"worst_index", r.report.worst_index},
                      {"coordinates", r.report.coordinates},
                      {"passed", r.passed(tolerance)}});
  }
  return {{"tolerance", tolerance}, {"passed", all}, {"checks", checks}};
}

}  // namespace retrosem
