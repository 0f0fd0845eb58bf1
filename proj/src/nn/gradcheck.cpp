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

#include "retrosem/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "retrosem/error.hpp"

namespace retrosem::nn {

namespace {

void require_finite_tape(const Tensor& loss) {
  for (const Node* n : topological_order(*loss.node())) {
    for (double v : n->data) {
      if (!std::isfinite(v)) {
        throw NumericDomainError(std::string("grad_check: non-finite value produced by ") + n->op);
      }
    }
  }
  if (!std::isfinite(loss.item())) {
    throw NumericDomainError(std::string("grad_check: non-finite loss from ") + loss.op());
  }
}

double evaluate(const std::function<Tensor()>& loss_fn) {
  NoGradGuard guard;
  const Tensor loss = loss_fn();
  const double v = loss.item();
  if (!std::isfinite(v)) {
    throw NumericDomainError(std::string("grad_check: non-finite loss from ") + loss.op());
  }
  return v;
}

}  // namespace

void GradCheckReport::merge(const GradCheckReport& other) {
  const std::size_t total = coordinates + other.coordinates;
  if (other.max_relative_error > max_relative_error || coordinates == 0) {
    *this = other;
  }
  coordinates = total;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(std::abs(numeric), 1e-3);
}

GradCheckReport grad_check(const std::function<Tensor()>& loss_fn,
                           const std::vector<NamedTensor>& inputs, double h) {
  std::vector<Tensor> tensors;
  for (const auto& [name, t] : inputs) {
    Tensor copy = t;
    copy.set_requires_grad(true);
    copy.zero_grad();
    tensors.push_back(copy);
  }
  const Tensor loss = loss_fn();
  if (loss.size() != 1) {
    throw ContractError("grad_check: function is not scalar-valued, shape " +
                        shape_string(loss.shape()));
  }
  require_finite_tape(loss);
  loss.backward();

  GradCheckReport report;
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    Tensor& t = tensors[k];
    std::vector<double> analytic(t.size(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.begin());
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double plus = evaluate(loss_fn);
      data[i] = saved - h;
      const double minus = evaluate(loss_fn);
      data[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double err = relative_error(analytic[i], numeric);
      ++report.coordinates;
      if (err > report.max_relative_error || report.coordinates == 1) {
        report.max_relative_error = err;
        report.worst_input = inputs[k].first;
        report.worst_index = i;
        report.analytic = analytic[i];
        report.numeric = numeric;
      }
    }
    t.zero_grad();
  }
  return report;
}

GradCheckReport grad_check_random(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                                  const std::vector<Shape>& shapes,
                                  const std::vector<std::uint64_t>& seeds, double h) {
  GradCheckReport worst;
  for (std::uint64_t seed : seeds) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<NamedTensor> inputs;
    std::vector<Tensor> tensors;
    for (std::size_t k = 0; k < shapes.size(); ++k) {
      std::vector<double> values(shape_size(shapes[k]));
      for (double& v : values) v = dist(rng);
      Tensor t = Tensor::from(shapes[k], std::move(values), true);
      tensors.push_back(t);
      inputs.emplace_back("input" + std::to_string(k), t);
    }
    worst.merge(grad_check([&] { return fn(tensors); }, inputs, h));
  }
  return worst;
}

}  // namespace retrosem::nn
