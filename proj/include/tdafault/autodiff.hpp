// Copyright 2026 The tdafault Authors. All Rights Reserved.
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

// Tape-based reverse-mode differentiation over dense double matrices.
//
// A Var is a handle into the Tape that created it. Operations append a node
// holding the forward value and an adjoint closure; Tape::backward walks the
// nodes in reverse creation order and accumulates gradients by addition.
// A tape is not thread-safe; use one per thread.

#include <functional>
#include <string>
#include <vector>

#include "tdafault/types.hpp"

namespace tdafault::ad {

using Mat = Matrix<double>;

class Tape;

class Var {
 public:
  Var() = default;

  const Mat& value() const;
  const Mat& grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf holding a copy of `value`. Gradients are only tracked for leaves
  // created with requires_grad.
  Var leaf(Mat value, bool requires_grad = true);
  Var constant(Mat value) { return leaf(std::move(value), false); }

  // Seeds d(out)/d(out) = 1 and propagates to every leaf. `out` must be 1x1.
  void backward(const Var& out);

  std::size_t size() const { return nodes_.size(); }

  // Internal: used by the op implementations.
  using Adjoint = std::function<void(Tape&, int self)>;
  Var push(const char* op, Mat value, std::vector<int> inputs, Adjoint adjoint);
  const Mat& value_of(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Mat& grad_of(int id) const;
  bool requires_grad_of(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  // Adds `delta` into the gradient buffer of node `id` when it tracks gradients.
  void accumulate(int id, const Mat& delta);
  template <typename Expr>
  void accumulate_expr(int id, const Expr& delta) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) return;
    ensure_grad(n);
    n.grad += delta;
  }
  const Mat& incoming(int self) const { return nodes_[static_cast<std::size_t>(self)].grad; }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    std::vector<int> inputs;
    Adjoint adjoint;
  };
  static void ensure_grad(Node& n) {
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  }
  std::vector<Node> nodes_;
};

// Differentiable primitives. Shape mismatches raise std::invalid_argument
// naming both shapes.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
// Same-shape addition, or a (m x n) + b (1 x n) with b broadcast down rows.
Var add(const Var& a, const Var& b);
Var subtract(const Var& a, const Var& b);
Var multiply(const Var& a, const Var& b);
Var scale(const Var& a, double s);
// a (m x n) with each row multiplied elementwise by row (1 x n).
Var mul_rows(const Var& a, const Var& row);
// a (m x n) with each column multiplied elementwise by col (m x 1).
Var mul_cols(const Var& a, const Var& col);
Var row_softmax(const Var& a);
Var exp(const Var& a);
// Mean over rows: (m x n) -> (1 x n).
Var mean_rows(const Var& a);
// Per-row normalization to zero mean and unit variance (no affine part).
Var layer_norm(const Var& a, double eps = 1e-5);
Var gelu(const Var& a);
// Mean over rows of -log softmax(logits)[target]. logits is (m x C).
Var cross_entropy_with_logits(const Var& logits, const std::vector<int>& targets);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return subtract(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

// Names of the differentiable primitives above.
const std::vector<std::string>& op_catalog();

std::string shape_string(const Mat& m);

using ScalarFunction = std::function<Var(Tape&, const std::vector<Var>&)>;

// Largest coordinate-wise |g_ad - g_fd| / max(1, |g_ad|, |g_fd|) between the
// reverse-mode gradient and central differences with step h.
double grad_check(const ScalarFunction& f, const std::vector<Mat>& params, double h = 1e-5);

}  // namespace tdafault::ad
