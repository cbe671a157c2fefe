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

#include "tdafault/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tdafault::ad {

namespace {

void require_same_tape(const Var& a, const Var& b, const char* op) {
  if (a.tape() == nullptr || a.tape() != b.tape())
    throw std::invalid_argument(std::string(op) + ": operands belong to different tapes");
}

[[noreturn]] void shape_error(const char* op, const Mat& a, const Mat& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                              shape_string(b));
}

}  // namespace

std::string shape_string(const Mat& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

const Mat& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("Var: uninitialized handle");
  return tape_->value_of(id_);
}

const Mat& Var::grad() const {
  if (tape_ == nullptr) throw std::logic_error("Var: uninitialized handle");
  return tape_->grad_of(id_);
}

bool Var::requires_grad() const { return tape_ != nullptr && tape_->requires_grad_of(id_); }

Var Tape::leaf(Mat value, bool requires_grad) {
  if (!value.allFinite()) throw NumericalError("autodiff: non-finite value in leaf");
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::push(const char* op, Mat value, std::vector<int> inputs, Adjoint adjoint) {
  if (!value.allFinite()) throw NumericalError(std::string("autodiff: non-finite output of ") + op);
  Node n;
  n.value = std::move(value);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(), [this](int i) {
    return nodes_[static_cast<std::size_t>(i)].requires_grad;
  });
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.adjoint = std::move(adjoint);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

const Mat& Tape::grad_of(int id) const {
  static const Mat kEmpty;
  const auto& n = nodes_[static_cast<std::size_t>(id)];
  return n.grad.size() == 0 ? kEmpty : n.grad;
}

void Tape::accumulate(int id, const Mat& delta) { accumulate_expr(id, delta); }

void Tape::backward(const Var& out) {
  if (out.tape() != this) throw std::invalid_argument("backward: variable belongs to another tape");
  const auto& v = value_of(out.id());
  if (v.rows() != 1 || v.cols() != 1)
    throw std::invalid_argument("backward: output must be a scalar, got " + shape_string(v));
  for (auto& n : nodes_) n.grad.resize(0, 0);
  auto& root = nodes_[static_cast<std::size_t>(out.id())];
  if (!root.requires_grad) return;
  root.grad = Mat::Ones(1, 1);
  for (int i = out.id(); i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || n.grad.size() == 0 || !n.adjoint) continue;
    n.adjoint(*this, i);
  }
}

Var matmul(const Var& a, const Var& b) {
  require_same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  return a.tape()->push("matmul", a.value() * b.value(), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Mat& g = t.incoming(self);
    if (t.requires_grad_of(ia)) t.accumulate_expr(ia, g * t.value_of(ib).transpose());
    if (t.requires_grad_of(ib)) t.accumulate_expr(ib, t.value_of(ia).transpose() * g);
  });
}

Var transpose(const Var& a) {
  const int ia = a.id();
  return a.tape()->push("transpose", a.value().transpose(), {ia}, [ia](Tape& t, int self) {
    t.accumulate_expr(ia, t.incoming(self).transpose());
  });
}

namespace {

Var add_impl(const Var& a, const Var& b, double sign, const char* op) {
  require_same_tape(a, b, op);
  const Mat& av = a.value();
  const Mat& bv = b.value();
  const int ia = a.id(), ib = b.id();
  if (av.rows() == bv.rows() && av.cols() == bv.cols()) {
    return a.tape()->push(op, av + sign * bv, {ia, ib}, [ia, ib, sign](Tape& t, int self) {
      const Mat& g = t.incoming(self);
      t.accumulate_expr(ia, g);
      t.accumulate_expr(ib, sign * g);
    });
  }
  if (bv.rows() == 1 && bv.cols() == av.cols()) {
    Mat out = av;
    out.rowwise() += sign * bv.row(0);
    return a.tape()->push(op, std::move(out), {ia, ib}, [ia, ib, sign](Tape& t, int self) {
      const Mat& g = t.incoming(self);
      t.accumulate_expr(ia, g);
      t.accumulate_expr(ib, sign * g.colwise().sum());
    });
  }
  shape_error(op, av, bv);
}

}  // namespace

Var add(const Var& a, const Var& b) { return add_impl(a, b, 1.0, "add"); }
Var subtract(const Var& a, const Var& b) { return add_impl(a, b, -1.0, "subtract"); }

Var multiply(const Var& a, const Var& b) {
  require_same_tape(a, b, "multiply");
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("multiply", a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  return a.tape()->push("multiply", a.value().cwiseProduct(b.value()), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Mat& g = t.incoming(self);
    if (t.requires_grad_of(ia)) t.accumulate_expr(ia, g.cwiseProduct(t.value_of(ib)));
    if (t.requires_grad_of(ib)) t.accumulate_expr(ib, g.cwiseProduct(t.value_of(ia)));
  });
}

Var scale(const Var& a, double s) {
  const int ia = a.id();
  return a.tape()->push("scale", s * a.value(), {ia}, [ia, s](Tape& t, int self) {
    t.accumulate_expr(ia, s * t.incoming(self));
  });
}

Var mul_rows(const Var& a, const Var& row) {
  require_same_tape(a, row, "mul_rows");
  if (row.rows() != 1 || row.cols() != a.cols()) shape_error("mul_rows", a.value(), row.value());
  const int ia = a.id(), ir = row.id();
  Mat out = a.value().array().rowwise() * row.value().row(0).array();
  return a.tape()->push("mul_rows", std::move(out), {ia, ir}, [ia, ir](Tape& t, int self) {
    const Mat& g = t.incoming(self);
    if (t.requires_grad_of(ia))
      t.accumulate_expr(ia, (g.array().rowwise() * t.value_of(ir).row(0).array()).matrix());
    if (t.requires_grad_of(ir)) t.accumulate_expr(ir, g.cwiseProduct(t.value_of(ia)).colwise().sum());
  });
}

Var mul_cols(const Var& a, const Var& col) {
  require_same_tape(a, col, "mul_cols");
  if (col.cols() != 1 || col.rows() != a.rows()) shape_error("mul_cols", a.value(), col.value());
  const int ia = a.id(), ic = col.id();
  Mat out = a.value().array().colwise() * col.value().col(0).array();
  return a.tape()->push("mul_cols", std::move(out), {ia, ic}, [ia, ic](Tape& t, int self) {
    const Mat& g = t.incoming(self);
    if (t.requires_grad_of(ia))
      t.accumulate_expr(ia, (g.array().colwise() * t.value_of(ic).col(0).array()).matrix());
    if (t.requires_grad_of(ic)) t.accumulate_expr(ic, g.cwiseProduct(t.value_of(ia)).rowwise().sum());
  });
}

Var row_softmax(const Var& a) {
  const Mat& x = a.value();
  Mat y = (x.colwise() - x.rowwise().maxCoeff()).array().exp().matrix();
  y.array().colwise() /= y.rowwise().sum().array();
  const int ia = a.id();
  return a.tape()->push("row_softmax", std::move(y), {ia}, [ia](Tape& t, int self) {
    const Mat& g = t.incoming(self);
    const Mat& yv = t.value_of(self);
    const Eigen::VectorXd dot = g.cwiseProduct(yv).rowwise().sum();
    t.accumulate_expr(ia, (yv.array() * (g.colwise() - dot).array()).matrix());
  });
}

Var exp(const Var& a) {
  const int ia = a.id();
  return a.tape()->push("exp", a.value().array().exp().matrix(), {ia}, [ia](Tape& t, int self) {
    t.accumulate_expr(ia, t.incoming(self).cwiseProduct(t.value_of(self)));
  });
}

Var mean_rows(const Var& a) {
  const int ia = a.id();
  const Index m = a.rows();
  return a.tape()->push("mean_rows", a.value().colwise().mean(), {ia}, [ia, m](Tape& t, int self) {
    const Mat& g = t.incoming(self);
    t.accumulate_expr(ia, g.replicate(m, 1) / static_cast<double>(m));
  });
}

Var layer_norm(const Var& a, double eps) {
  const Mat& x = a.value();
  const Eigen::VectorXd mu = x.rowwise().mean();
  const Mat centered = x.colwise() - mu;
  const Eigen::VectorXd inv_sigma =
      (centered.array().square().rowwise().mean() + eps).rsqrt().matrix();
  Mat y = centered.array().colwise() * inv_sigma.array();
  const int ia = a.id();
  return a.tape()->push("layer_norm", std::move(y), {ia}, [ia, inv_sigma](Tape& t, int self) {
    const Mat& g = t.incoming(self);
    const Mat& yv = t.value_of(self);
    const Eigen::VectorXd g_mean = g.rowwise().mean();
    const Eigen::VectorXd gy_mean = g.cwiseProduct(yv).rowwise().mean();
    Mat dx = (g.colwise() - g_mean) - (yv.array().colwise() * gy_mean.array()).matrix();
    dx.array().colwise() *= inv_sigma.array();
    t.accumulate_expr(ia, dx);
  });
}

Var gelu(const Var& a) {
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  const Mat& x = a.value();
  Mat y = x.unaryExpr([inv_sqrt2](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); });
  const int ia = a.id();
  return a.tape()->push("gelu", std::move(y), {ia}, [ia, inv_sqrt2](Tape& t, int self) {
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    const Mat d = t.value_of(ia).unaryExpr([inv_sqrt2, inv_sqrt_2pi](double v) {
      return 0.5 * (1.0 + std::erf(v * inv_sqrt2)) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
    });
    t.accumulate_expr(ia, t.incoming(self).cwiseProduct(d));
  });
}

Var cross_entropy_with_logits(const Var& logits, const std::vector<int>& targets) {
  const Mat& z = logits.value();
  if (static_cast<Index>(targets.size()) != z.rows())
    throw std::invalid_argument("cross_entropy_with_logits: " + std::to_string(targets.size()) +
                                " targets for logits " + shape_string(z));
  const Index m = z.rows();
  Mat probs(z.rows(), z.cols());
  double loss = 0.0;
  for (Index r = 0; r < m; ++r) {
    const int target = targets[static_cast<std::size_t>(r)];
    if (target < 0 || target >= z.cols())
      throw std::invalid_argument("cross_entropy_with_logits: target " + std::to_string(target) +
                                  " out of range for " + std::to_string(z.cols()) + " classes");
    const double mx = z.row(r).maxCoeff();
    const auto e = (z.row(r).array() - mx).exp();
    const double sum = e.sum();
    probs.row(r) = e / sum;
    loss += (mx + std::log(sum)) - z(r, target);
  }
  loss /= static_cast<double>(m);
  const int il = logits.id();
  Mat out(1, 1);
  out(0, 0) = loss;
  return logits.tape()->push("cross_entropy_with_logits", std::move(out), {il},
                              [il, probs = std::move(probs), targets, m](Tape& t, int self) {
                                Mat d = probs;
                                for (Index r = 0; r < m; ++r) d(r, targets[static_cast<std::size_t>(r)]) -= 1.0;
                                t.accumulate_expr(il, (t.incoming(self)(0, 0) / static_cast<double>(m)) * d);
                              });
}

const std::vector<std::string>& op_catalog() {
  static const std::vector<std::string> ops = {
      "matmul",     "transpose", "add", "subtract",  "multiply", "scale", "mul_rows", "mul_cols",
      "row_softmax", "exp",      "mean_rows", "layer_norm", "gelu", "cross_entropy_with_logits"};
  return ops;
}

double grad_check(const ScalarFunction& f, const std::vector<Mat>& params, double h) {
  if (!(h >= 1e-7 && h <= 1e-3)) throw std::invalid_argument("grad_check: step must lie in [1e-7, 1e-3]");
  for (const auto& p : params)
    if (!p.allFinite()) throw std::invalid_argument("grad_check: non-finite parameter");

  auto evaluate = [&f](const std::vector<Mat>& values) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(values.size());
    for (const auto& v : values) vars.push_back(tape.constant(v));
    const Var out = f(tape, vars);
    if (out.rows() != 1 || out.cols() != 1)
      throw std::invalid_argument("grad_check: function must be scalar-valued, got " + shape_string(out.value()));
    return out.value()(0, 0);
  };

  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.leaf(p, true));
  const Var out = f(tape, vars);
  if (out.rows() != 1 || out.cols() != 1)
    throw std::invalid_argument("grad_check: function must be scalar-valued, got " + shape_string(out.value()));
  tape.backward(out);

  double worst = 0.0;
  std::vector<Mat> probe = params;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const Mat& g = vars[p].grad();
    for (Index i = 0; i < params[p].size(); ++i) {
      const double original = params[p](i);
      probe[p](i) = original + h;
      const double plus = evaluate(probe);
      probe[p](i) = original - h;
      const double minus = evaluate(probe);
      probe[p](i) = original;
      const double fd = (plus - minus) / (2.0 * h);
      const double ad = g.size() == 0 ? 0.0 : g(i);
      const double err = std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace tdafault::ad
