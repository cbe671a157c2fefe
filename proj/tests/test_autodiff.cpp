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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "tdafault/rng.hpp"

namespace tdafault::ad {
namespace {

Mat random_mat(Rng& rng, Index r, Index c, double lo = -1.0, double hi = 1.0) {
  Mat m(r, c);
  for (Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(lo, hi);
  return m;
}

// Collapses any output to a scalar through a fixed random weighting so every
// output coordinate contributes to the checked gradient.
Var weighted_sum(Tape& tape, const Var& y, std::uint64_t seed) {
  Rng rng(seed);
  const Var w = tape.constant(random_mat(rng, y.rows(), y.cols()));
  const Var ones_left = tape.constant(Mat::Ones(1, y.rows()));
  const Var ones_right = tape.constant(Mat::Ones(y.cols(), 1));
  return matmul(matmul(ones_left, multiply(y, w)), ones_right);
}

TEST(Autodiff, CatalogListsEveryPrimitive) {
  const auto& ops = op_catalog();
  EXPECT_EQ(ops.size(), 14u);
  for (const char* name : {"matmul", "transpose", "add", "subtract", "multiply", "scale", "mul_rows", "mul_cols",
                           "row_softmax", "exp", "mean_rows", "layer_norm", "gelu", "cross_entropy_with_logits"})
    EXPECT_NE(std::find(ops.begin(), ops.end(), name), ops.end()) << name;
}

TEST(Autodiff, MatmulByIdentity) {
  Rng rng(1);
  Tape t;
  const Mat a = random_mat(rng, 3, 4);
  EXPECT_EQ(matmul(t.leaf(a), t.constant(Mat::Identity(4, 4))).value(), a);
}

TEST(Autodiff, SoftmaxOfEqualRowIsUniform) {
  Tape t;
  const Var s = row_softmax(t.leaf(Mat::Constant(2, 5, 3.7)));
  EXPECT_LT((s.value().array() - 0.2).abs().maxCoeff(), 1e-15);
}

TEST(Autodiff, SoftmaxRowsSumToOneAndShiftInvariant) {
  Rng rng(2);
  const Mat x = random_mat(rng, 6, 7, -20, 20);
  Tape t;
  const Mat a = row_softmax(t.leaf(x)).value();
  const Mat b = row_softmax(t.leaf((x.array() + 123.0).matrix())).value();
  EXPECT_LT((a.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Autodiff, CrossEntropyOfZeroLogitsIsLogC) {
  Tape t;
  for (int target : {0, 3, 9}) {
    const Var loss = cross_entropy_with_logits(t.leaf(Mat::Zero(1, 10)), {target});
    EXPECT_NEAR(loss.value()(0, 0), std::log(10.0), 1e-15);
  }
}

TEST(Autodiff, ShapeMismatchNamesBothShapes) {
  Tape t;
  try {
    matmul(t.leaf(Mat::Zero(2, 3)), t.leaf(Mat::Zero(4, 5)));
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("4x5"), std::string::npos) << msg;
  }
  EXPECT_THROW(add(t.leaf(Mat::Zero(2, 3)), t.leaf(Mat::Zero(3, 2))), std::invalid_argument);
  EXPECT_THROW(multiply(t.leaf(Mat::Zero(2, 3)), t.leaf(Mat::Zero(2, 2))), std::invalid_argument);
  EXPECT_THROW(mul_rows(t.leaf(Mat::Zero(2, 3)), t.leaf(Mat::Zero(1, 2))), std::invalid_argument);
  EXPECT_THROW(mul_cols(t.leaf(Mat::Zero(2, 3)), t.leaf(Mat::Zero(3, 1))), std::invalid_argument);
  EXPECT_THROW(cross_entropy_with_logits(t.leaf(Mat::Zero(2, 3)), {0}), std::invalid_argument);
  EXPECT_THROW(cross_entropy_with_logits(t.leaf(Mat::Zero(1, 3)), {3}), std::invalid_argument);
}

TEST(Autodiff, NonFiniteValuesAbort) {
  Tape t;
  Mat bad = Mat::Zero(1, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(t.leaf(bad), NumericalError);
  EXPECT_THROW(exp(t.leaf(Mat::Constant(1, 1, 1000.0))), NumericalError);
}

TEST(Autodiff, BackwardRequiresScalar) {
  Tape t;
  const Var x = t.leaf(Mat::Ones(2, 2));
  EXPECT_THROW(t.backward(x), std::invalid_argument);
}

TEST(Autodiff, FanOutSumsAdjoints) {
  Tape t;
  Mat x0(1, 3);
  x0 << 0.5, -1.0, 2.0;
  const Var x = t.leaf(x0);
  // f = sum(exp(x)) + sum(3x) so df/dx = exp(x) + 3.
  const Var ones = t.constant(Mat::Ones(3, 1));
  const Var f = matmul(exp(x), ones) + matmul(3.0 * x, ones);
  t.backward(f);
  EXPECT_LT((x.grad().array() - (x0.array().exp() + 3.0)).abs().maxCoeff(), 1e-14);
}

TEST(GradCheck, SumOfSquares) {
  Rng rng(3);
  const Mat theta = random_mat(rng, 3, 3);
  const auto f = [](Tape& t, const std::vector<Var>& p) {
    const Var sq = multiply(p[0], p[0]);
    return matmul(matmul(t.constant(Mat::Ones(1, 3)), sq), t.constant(Mat::Ones(3, 1)));
  };
  EXPECT_LT(grad_check(f, {theta}, 1e-5), 1e-9);
  Tape t;
  const Var p = t.leaf(theta);
  t.backward(f(t, {p}));
  EXPECT_LT((p.grad() - 2.0 * theta).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GradCheck, LinearFunctionIsExact) {
  Rng rng(4);
  const Mat w = random_mat(rng, 4, 1);
  const auto f = [w](Tape& t, const std::vector<Var>& p) { return matmul(p[0], t.constant(w)); };
  EXPECT_LT(grad_check(f, {random_mat(rng, 1, 4)}, 1e-5), 1e-10);
}

TEST(GradCheck, RejectsBadInputs) {
  const auto vec_out = [](Tape&, const std::vector<Var>& p) { return p[0]; };
  EXPECT_THROW(grad_check(vec_out, {Mat::Ones(2, 2)}), std::invalid_argument);
  const auto scalar = [](Tape& t, const std::vector<Var>& p) { return matmul(p[0], t.constant(Mat::Ones(2, 1))); };
  EXPECT_THROW(grad_check(scalar, {Mat::Ones(1, 2)}, 1e-2), std::invalid_argument);
  EXPECT_THROW(grad_check(scalar, {Mat::Ones(1, 2)}, 1e-8), std::invalid_argument);
  Mat bad = Mat::Ones(1, 2);
  bad(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(grad_check(scalar, {bad}), std::invalid_argument);
}

struct PrimitiveCase {
  std::string name;
  int arity;
  std::function<Var(Tape&, const std::vector<Var>&)> op;
  std::function<std::vector<Mat>(Rng&, Index, Index)> inputs;
};

std::vector<PrimitiveCase> primitive_cases() {
  auto two = [](Rng& r, Index m, Index n) { return std::vector<Mat>{random_mat(r, m, n), random_mat(r, m, n)}; };
  auto one = [](Rng& r, Index m, Index n) { return std::vector<Mat>{random_mat(r, m, n)}; };
  return {
      {"matmul", 2, [](Tape&, const std::vector<Var>& p) { return matmul(p[0], p[1]); },
       [](Rng& r, Index m, Index n) { return std::vector<Mat>{random_mat(r, m, n), random_mat(r, n, m)}; }},
      {"transpose", 1, [](Tape&, const std::vector<Var>& p) { return transpose(p[0]); }, one},
      {"add", 2, [](Tape&, const std::vector<Var>& p) { return add(p[0], p[1]); }, two},
      {"add_row_broadcast", 2, [](Tape&, const std::vector<Var>& p) { return add(p[0], p[1]); },
       [](Rng& r, Index m, Index n) { return std::vector<Mat>{random_mat(r, m, n), random_mat(r, 1, n)}; }},
      {"subtract", 2, [](Tape&, const std::vector<Var>& p) { return subtract(p[0], p[1]); }, two},
      {"multiply", 2, [](Tape&, const std::vector<Var>& p) { return multiply(p[0], p[1]); }, two},
      {"scale", 1, [](Tape&, const std::vector<Var>& p) { return scale(p[0], -2.5); }, one},
      {"mul_rows", 2, [](Tape&, const std::vector<Var>& p) { return mul_rows(p[0], p[1]); },
       [](Rng& r, Index m, Index n) { return std::vector<Mat>{random_mat(r, m, n), random_mat(r, 1, n)}; }},
      {"mul_cols", 2, [](Tape&, const std::vector<Var>& p) { return mul_cols(p[0], p[1]); },
       [](Rng& r, Index m, Index n) { return std::vector<Mat>{random_mat(r, m, n), random_mat(r, m, 1)}; }},
      {"row_softmax", 1, [](Tape&, const std::vector<Var>& p) { return row_softmax(p[0]); }, one},
      {"exp", 1, [](Tape&, const std::vector<Var>& p) { return exp(p[0]); }, one},
      {"mean_rows", 1, [](Tape&, const std::vector<Var>& p) { return mean_rows(p[0]); }, one},
      {"layer_norm", 1, [](Tape&, const std::vector<Var>& p) { return layer_norm(p[0]); },
       [](Rng& r, Index m, Index n) { return std::vector<Mat>{random_mat(r, m, n + 1, -2, 2)}; }},
      {"gelu", 1, [](Tape&, const std::vector<Var>& p) { return gelu(p[0]); },
       [](Rng& r, Index m, Index n) { return std::vector<Mat>{random_mat(r, m, n, -3, 3)}; }},
      {"cross_entropy_with_logits", 1,
       [](Tape&, const std::vector<Var>& p) {
         std::vector<int> targets(static_cast<std::size_t>(p[0].rows()));
         for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = static_cast<int>(i % p[0].cols());
         return cross_entropy_with_logits(p[0], targets);
       },
       [](Rng& r, Index m, Index n) { return std::vector<Mat>{random_mat(r, m, n, -3, 3)}; }},
  };
}

TEST(GradCheck, EveryPrimitiveInIsolation) {
  Rng rng(5);
  for (const auto& c : primitive_cases()) {
    for (int rep = 0; rep < 4; ++rep) {
      const Index m = 1 + static_cast<Index>(rng.below(8));
      const Index n = 1 + static_cast<Index>(rng.below(7));
      const auto inputs = c.inputs(rng, m, n);
      const std::uint64_t wseed = rng.next();
      const auto f = [&c, wseed](Tape& t, const std::vector<Var>& p) { return weighted_sum(t, c.op(t, p), wseed); };
      EXPECT_LT(grad_check(f, inputs, 1e-5), 1e-6) << c.name << " at " << m << "x" << n;
    }
  }
}

TEST(Autodiff, GeluMatchesErfForm) {
  Tape t;
  Mat x(1, 3);
  x << -1.0, 0.0, 2.0;
  const Mat y = gelu(t.leaf(x)).value();
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(y(0, i), 0.5 * x(0, i) * (1 + std::erf(x(0, i) / std::sqrt(2.0))), 1e-15);
}

TEST(Autodiff, LayerNormNormalizesRows) {
  Rng rng(6);
  Tape t;
  const Mat y = layer_norm(t.leaf(random_mat(rng, 4, 8, -5, 5))).value();
  for (Index r = 0; r < 4; ++r) {
    EXPECT_NEAR(y.row(r).mean(), 0.0, 1e-12);
    EXPECT_NEAR(y.row(r).squaredNorm() / 8.0, 1.0, 1e-3);
  }
}

TEST(Autodiff, DeterministicForwardAndBackward) {
  auto run = [] {
    Rng rng(7);
    Tape t;
    const Var a = t.leaf(random_mat(rng, 5, 6));
    const Var b = t.leaf(random_mat(rng, 6, 3));
    const Var loss = cross_entropy_with_logits(gelu(matmul(layer_norm(a), b)), {0, 1, 2, 0, 1});
    t.backward(loss);
    return std::vector<Mat>{loss.value(), a.grad(), b.grad()};
  };
  const auto x = run(), y = run();
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_EQ(std::memcmp(x[i].data(), y[i].data(), sizeof(double) * x[i].size()), 0);
}

TEST(Autodiff, ConstantsReceiveNoGradient) {
  Tape t;
  const Var c = t.constant(Mat::Ones(1, 2));
  const Var x = t.leaf(Mat::Ones(2, 1));
  t.backward(matmul(c, x));
  EXPECT_FALSE(c.requires_grad());
  EXPECT_EQ(x.grad(), Mat::Ones(2, 1));
}

}  // namespace
}  // namespace tdafault::ad
