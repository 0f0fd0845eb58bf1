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

#include "retrosem/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "retrosem/error.hpp"

namespace retrosem::nn {

namespace {

std::string two_shapes(const char* op, const Tensor& a, const Tensor& b) {
  std::ostringstream os;
  os << op << ": incompatible shapes " << shape_string(a.shape()) << " and "
     << shape_string(b.shape());
  return os.str();
}

void require_2d(const char* op, const Tensor& a) {
  if (a.dim() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
  }
}

void require_finite(const char* op, const Tensor& a) {
  for (double v : a.data()) {
    if (!std::isfinite(v)) throw NumericDomainError(std::string(op) + ": non-finite input");
  }
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }
bool wants(Node& self, std::size_t i) { return self.parents[i]->requires_grad; }

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& a, const char* op, Fwd fwd, Deriv deriv) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.at(i));
  return make_result(a.shape(), std::move(out), op, {a}, [deriv](Node& self) {
    Node& x = parent(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      x.grad[i] += self.grad[i] * deriv(x.data[i], self.data[i]);
    }
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.dim() != 2 || b.dim() != 2 || a.cols() != b.rows()) {
    throw DimensionError(two_shapes("matmul", a, b));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* brow = B + p * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return make_result({m, n}, std::move(out), "matmul", {a, b}, [m, k, n](Node& self) {
    Node& A = parent(self, 0);
    Node& B = parent(self, 1);
    const double* G = self.grad.data();
    if (A.requires_grad) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * B.data[p * n + j];
          A.grad[i * k + p] += acc;
        }
    }
    if (B.requires_grad) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A.data[i * k + p];
          if (av == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) B.grad[p * n + j] += av * G[i * n + j];
        }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
    return make_result(a.shape(), std::move(out), "add", {a, b}, [](Node& self) {
      for (std::size_t p = 0; p < 2; ++p) {
        if (!wants(self, p)) continue;
        Node& x = parent(self, p);
        for (std::size_t i = 0; i < self.grad.size(); ++i) x.grad[i] += self.grad[i];
      }
    });
  }
  if (a.dim() == 2 && b.dim() == 1 && b.size() == a.cols()) {
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a.at(i * n + j) + b.at(j);
    return make_result(a.shape(), std::move(out), "add", {a, b}, [m, n](Node& self) {
      if (wants(self, 0)) {
        Node& x = parent(self, 0);
        for (std::size_t i = 0; i < self.grad.size(); ++i) x.grad[i] += self.grad[i];
      }
      if (wants(self, 1)) {
        Node& bias = parent(self, 1);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) bias.grad[j] += self.grad[i * n + j];
      }
    });
  }
  throw DimensionError(two_shapes("add", a, b));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw DimensionError(two_shapes("sub", a, b));
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
  return make_result(a.shape(), std::move(out), "sub", {a, b}, [](Node& self) {
    if (wants(self, 0)) {
      Node& x = parent(self, 0);
      for (std::size_t i = 0; i < self.grad.size(); ++i) x.grad[i] += self.grad[i];
    }
    if (wants(self, 1)) {
      Node& y = parent(self, 1);
      for (std::size_t i = 0; i < self.grad.size(); ++i) y.grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw DimensionError(two_shapes("mul", a, b));
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  return make_result(a.shape(), std::move(out), "mul", {a, b}, [](Node& self) {
    Node& x = parent(self, 0);
    Node& y = parent(self, 1);
    if (x.requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) x.grad[i] += self.grad[i] * y.data[i];
    if (y.requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) y.grad[i] += self.grad[i] * x.data[i];
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, "scale", [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor gelu(const Tensor& a) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return unary(
      a, "gelu", [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
      [inv_sqrt_2pi](double x, double) {
        const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        return cdf + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
      });
}

namespace {

// Shared softmax backward: dx = y * (dy - sum(dy * y)) per row.
void softmax_backward(Node& self, std::size_t rows, std::size_t cols) {
  Node& x = parent(self, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* y = self.data.data() + r * cols;
    const double* g = self.grad.data() + r * cols;
    double dot = 0.0;
    for (std::size_t c = 0; c < cols; ++c) dot += g[c] * y[c];
    for (std::size_t c = 0; c < cols; ++c) x.grad[r * cols + c] += y[c] * (g[c] - dot);
  }
}

}  // namespace

Tensor softmax(const Tensor& a) {
  require_finite("softmax", a);
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a.data().data() + r * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) mx = std::max(mx, x[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (out[r * cols + c] = std::exp(x[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] /= z;
  }
  return make_result(a.shape(), std::move(out), "softmax", {a},
                     [rows, cols](Node& self) { softmax_backward(self, rows, cols); });
}

Tensor masked_softmax(const Tensor& a, const std::vector<bool>& key_mask) {
  require_finite("masked_softmax", a);
  const std::size_t rows = a.rows(), cols = a.cols();
  if (key_mask.size() != cols) {
    throw DimensionError("masked_softmax: mask of length " + std::to_string(key_mask.size()) +
                         " for rows of width " + std::to_string(cols));
  }
  if (std::none_of(key_mask.begin(), key_mask.end(), [](bool b) { return b; })) {
    throw ContractError("masked_softmax: every position is masked");
  }
  std::vector<double> out(a.size(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a.data().data() + r * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c)
      if (key_mask[c]) mx = std::max(mx, x[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c)
      if (key_mask[c]) z += (out[r * cols + c] = std::exp(x[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] /= z;
  }
  // Masked outputs are exactly 0, so the generic backward gives them 0 gradient.
  return make_result(a.shape(), std::move(out), "masked_softmax", {a},
                     [rows, cols](Node& self) { softmax_backward(self, rows, cols); });
}

Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta, double eps) {
  require_finite("layer_norm", a);
  const std::size_t rows = a.rows(), cols = a.cols();
  if (gamma.size() != cols || beta.size() != cols) {
    throw DimensionError(two_shapes("layer_norm", a, gamma));
  }
  std::vector<double> out(a.size());
  auto xhat = std::make_shared<std::vector<double>>(a.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a.data().data() + r * cols;
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += x[c];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (x[c] - mu) * (x[c] - mu);
    var /= static_cast<double>(cols);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t c = 0; c < cols; ++c) {
      const double h = (x[c] - mu) * is;
      (*xhat)[r * cols + c] = h;
      out[r * cols + c] = gamma.at(c) * h + beta.at(c);
    }
  }
  return make_result(a.shape(), std::move(out), "layer_norm", {a, gamma, beta},
                     [rows, cols, xhat, inv_std](Node& self) {
                       Node& x = parent(self, 0);
                       Node& g = parent(self, 1);
                       Node& b = parent(self, 2);
                       const double n = static_cast<double>(cols);
                       std::vector<double> dxhat(cols);
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double* gr = self.grad.data() + r * cols;
                         const double* hr = xhat->data() + r * cols;
                         double mean_d = 0.0, mean_dh = 0.0;
                         for (std::size_t c = 0; c < cols; ++c) {
                           if (g.requires_grad) g.grad[c] += gr[c] * hr[c];
                           if (b.requires_grad) b.grad[c] += gr[c];
                           dxhat[c] = gr[c] * g.data[c];
                           mean_d += dxhat[c];
                           mean_dh += dxhat[c] * hr[c];
                         }
                         if (!x.requires_grad) continue;
                         mean_d /= n;
                         mean_dh /= n;
                         for (std::size_t c = 0; c < cols; ++c) {
                           x.grad[r * cols + c] +=
                               (*inv_std)[r] * (dxhat[c] - mean_d - hr[c] * mean_dh);
                         }
                       }
                     });
}

Tensor embedding(const Tensor& table, const std::vector<std::size_t>& ids) {
  require_2d("embedding", table);
  const std::size_t vocab = table.rows(), d = table.cols();
  for (std::size_t id : ids) {
    if (id >= vocab) {
      throw IndexError("embedding: id " + std::to_string(id) + " out of range [0, " +
                       std::to_string(vocab) + ")");
    }
  }
  std::vector<double> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(table.data().data() + ids[i] * d, d, out.data() + i * d);
  return make_result({ids.size(), d}, std::move(out), "embedding", {table},
                     [ids, d](Node& self) {
                       Node& t = parent(self, 0);
                       for (std::size_t i = 0; i < ids.size(); ++i)
                         for (std::size_t c = 0; c < d; ++c)
                           t.grad[ids[i] * d + c] += self.grad[i * d + c];
                     });
}

Tensor conv1d(const Tensor& input, const Tensor& kernel) {
  require_2d("conv1d", input);
  if (kernel.dim() != 3 || kernel.shape()[1] != input.cols()) {
    throw DimensionError(two_shapes("conv1d", input, kernel));
  }
  const std::size_t w = kernel.shape()[0];
  if (w % 2 == 0) throw ConfigError("conv1d: kernel width must be odd, got " + std::to_string(w));
  const std::size_t n = input.rows(), din = input.cols(), dout = kernel.shape()[2];
  const auto half = static_cast<std::ptrdiff_t>(w / 2);
  std::vector<double> out(n * dout, 0.0);
  const double* X = input.data().data();
  const double* K = kernel.data().data();
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < w; ++k) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
      for (std::size_t i = 0; i < din; ++i) {
        const double xv = X[src * din + i];
        const double* krow = K + (k * din + i) * dout;
        for (std::size_t o = 0; o < dout; ++o) out[t * dout + o] += xv * krow[o];
      }
    }
  }
  return make_result({n, dout}, std::move(out), "conv1d", {input, kernel},
                     [n, din, dout, w, half](Node& self) {
                       Node& x = parent(self, 0);
                       Node& ker = parent(self, 1);
                       for (std::size_t t = 0; t < n; ++t) {
                         const double* g = self.grad.data() + t * dout;
                         for (std::size_t k = 0; k < w; ++k) {
                           const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) - half;
                           if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
                           for (std::size_t i = 0; i < din; ++i) {
                             const std::size_t krow = (k * din + i) * dout;
                             double acc = 0.0;
                             for (std::size_t o = 0; o < dout; ++o) {
                               acc += g[o] * ker.data[krow + o];
                               if (ker.requires_grad)
                                 ker.grad[krow + o] += g[o] * x.data[src * din + i];
                             }
                             if (x.requires_grad) x.grad[src * din + i] += acc;
                           }
                         }
                       }
                     });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw DimensionError(two_shapes("concat_cols", parts[0], p));
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(parts[k].data().data() + r * widths[k], widths[k],
                  out.data() + r * total + offset);
    offset += widths[k];
  }
  const bool as_row = parts[0].dim() == 1;
  Shape shape = as_row ? Shape{total} : Shape{rows, total};
  return make_result(std::move(shape), std::move(out), "concat_cols", parts,
                     [rows, total, widths](Node& self) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         if (wants(self, k)) {
                           Node& p = parent(self, k);
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t c = 0; c < widths[k]; ++c)
                               p.grad[r * widths[k] + c] += self.grad[r * total + off + c];
                         }
                         off += widths[k];
                       }
                     });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  std::vector<std::size_t> sizes;
  std::vector<double> out;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw DimensionError(two_shapes("concat_rows", parts[0], p));
    rows += p.rows();
    sizes.push_back(p.size());
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return make_result({rows, cols}, std::move(out), "concat_rows", parts, [sizes](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (wants(self, k)) {
        Node& p = parent(self, k);
        for (std::size_t i = 0; i < sizes[k]; ++i) p.grad[i] += self.grad[off + i];
      }
      off += sizes[k];
    }
  });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.rows()) {
    throw IndexError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside " + shape_string(a.shape()));
  }
  const std::size_t cols = a.cols();
  std::vector<double> out(a.data().begin() + begin * cols, a.data().begin() + end * cols);
  return make_result({end - begin, cols}, std::move(out), "slice_rows", {a},
                     [begin, cols](Node& self) {
                       Node& x = parent(self, 0);
                       for (std::size_t i = 0; i < self.grad.size(); ++i)
                         x.grad[begin * cols + i] += self.grad[i];
                     });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  const std::size_t rows = a.rows(), cols = a.cols();
  if (begin > end || end > cols) {
    throw IndexError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside " + shape_string(a.shape()));
  }
  const std::size_t w = end - begin;
  std::vector<double> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(a.data().data() + r * cols + begin, w, out.data() + r * w);
  Shape shape = a.dim() == 1 ? Shape{w} : Shape{rows, w};
  return make_result(std::move(shape), std::move(out), "slice_cols", {a},
                     [rows, cols, begin, w](Node& self) {
                       Node& x = parent(self, 0);
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t c = 0; c < w; ++c)
                           x.grad[r * cols + begin + c] += self.grad[r * w + c];
                     });
}

Tensor transpose(const Tensor& a) {
  require_2d("transpose", a);
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.at(i * n + j);
  return make_result({n, m}, std::move(out), "transpose", {a}, [m, n](Node& self) {
    Node& x = parent(self, 0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) x.grad[i * n + j] += self.grad[j * m + i];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw DimensionError("reshape: " + shape_string(a.shape()) + " to " + shape_string(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_result(std::move(shape), std::move(out), "reshape", {a}, [](Node& self) {
    Node& x = parent(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) x.grad[i] += self.grad[i];
  });
}

Tensor span_max(const Tensor& a, const std::vector<Span>& spans) {
  const std::size_t n = a.rows(), d = a.cols();
  std::vector<double> out(spans.size() * d);
  std::vector<std::size_t> argmax(spans.size() * d);
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const auto [b, e] = spans[s];
    if (b >= e || e > n) {
      throw IndexError("span_max: span [" + std::to_string(b) + ", " + std::to_string(e) +
                       ") outside " + std::to_string(n) + " rows");
    }
    for (std::size_t c = 0; c < d; ++c) {
      std::size_t best = b;
      for (std::size_t r = b + 1; r < e; ++r)
        if (a.at(r * d + c) > a.at(best * d + c)) best = r;
      argmax[s * d + c] = best;
      out[s * d + c] = a.at(best * d + c);
    }
  }
  return make_result({spans.size(), d}, std::move(out), "span_max", {a},
                     [argmax, d](Node& self) {
                       Node& x = parent(self, 0);
                       for (std::size_t i = 0; i < argmax.size(); ++i)
                         x.grad[argmax[i] * d + (i % d)] += self.grad[i];
                     });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result({}, {s}, "sum", {a}, [](Node& self) {
    Node& x = parent(self, 0);
    for (double& g : x.grad) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw ContractError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets) {
  require_finite("cross_entropy", logits);
  const std::size_t rows = logits.rows(), cols = logits.cols();
  if (targets.size() != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         shape_string(logits.shape()));
  }
  for (std::size_t t : targets) {
    if (t >= cols) {
      throw IndexError("cross_entropy: target " + std::to_string(t) + " out of range [0, " +
                       std::to_string(cols) + ")");
    }
  }
  auto probs = std::make_shared<std::vector<double>>(logits.size());
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = logits.data().data() + r * cols;
    const double mx = *std::max_element(x, x + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += std::exp(x[c] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < cols; ++c) (*probs)[r * cols + c] = std::exp(x[c] - lse);
    loss += lse - x[targets[r]];
  }
  loss /= static_cast<double>(rows);
  return make_result({}, {loss}, "cross_entropy", {logits},
                     [probs, targets, rows, cols](Node& self) {
                       Node& x = parent(self, 0);
                       const double g = self.grad[0] / static_cast<double>(rows);
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t c = 0; c < cols; ++c) {
                           const double onehot = (c == targets[r]) ? 1.0 : 0.0;
                           x.grad[r * cols + c] += g * ((*probs)[r * cols + c] - onehot);
                         }
                     });
}

Tensor masked_cross_entropy(const Tensor& logits, std::size_t target,
                            const std::vector<bool>& valid) {
  require_finite("masked_cross_entropy", logits);
  const std::size_t n = logits.size();
  if (valid.size() != n) {
    throw DimensionError("masked_cross_entropy: mask of length " + std::to_string(valid.size()) +
                         " for " + shape_string(logits.shape()));
  }
  if (target >= n || !valid[target]) {
    throw IndexError("masked_cross_entropy: target " + std::to_string(target) +
                     " is not a valid position");
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (valid[i]) mx = std::max(mx, logits.at(i));
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (valid[i]) z += std::exp(logits.at(i) - mx);
  const double lse = mx + std::log(z);
  auto probs = std::make_shared<std::vector<double>>(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (valid[i]) (*probs)[i] = std::exp(logits.at(i) - lse);
  return make_result({}, {lse - logits.at(target)}, "masked_cross_entropy", {logits},
                     [probs, target](Node& self) {
                       Node& x = parent(self, 0);
                       for (std::size_t i = 0; i < probs->size(); ++i) {
                         const double onehot = (i == target) ? 1.0 : 0.0;
                         x.grad[i] += self.grad[0] * ((*probs)[i] - onehot);
                       }
                     });
}

Tensor dropout(const Tensor& a, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return a;
  if (p >= 1.0) throw ConfigError("dropout probability must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  auto factors = std::make_shared<std::vector<double>>(a.size());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    (*factors)[i] = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
    out[i] = a.at(i) * (*factors)[i];
  }
  return make_result(a.shape(), std::move(out), "dropout", {a}, [factors](Node& self) {
    Node& x = parent(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) x.grad[i] += self.grad[i] * (*factors)[i];
  });
}

}  // namespace retrosem::nn
