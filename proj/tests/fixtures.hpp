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

// Shared builders for attention-layer tests: random matrices and a single
// TDA layer with a cross-entropy head, written directly against the
// autodiff primitives.

#include <vector>

#include "tdafault/attention.hpp"
#include "tdafault/autodiff.hpp"
#include "tdafault/rng.hpp"

namespace fixture {

using tdafault::Index;
using tdafault::ad::Mat;

inline Mat random_mat(tdafault::Rng& rng, Index r, Index c, double lo = -1.0, double hi = 1.0) {
  Mat m(r, c);
  for (Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(lo, hi);
  return m;
}

inline std::vector<std::vector<double>> grid(const Mat& m) {
  std::vector<std::vector<double>> g(static_cast<std::size_t>(m.rows()), std::vector<double>(m.cols()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
  return g;
}

inline std::vector<double> row(const Mat& m) { return std::vector<double>(m.data(), m.data() + m.size()); }

// One attention layer: TDA head, output projection, residual and layer norm,
// mean pooling and a fixed classifier. Parameters in order:
// W_Q, W_K, W_Vt, W_Vs, a_trend, a_season, W_O.
struct TdaLayerProblem {
  Mat x, x_trend, x_season, classifier;
  std::vector<Mat> params;
  int target = 0;

  TdaLayerProblem(std::uint64_t seed, Index tokens = 4, Index d_model = 6, Index d_k = 3, Index d_v = 3,
                  Index classes = 5) {
    tdafault::Rng rng(seed);
    x = random_mat(rng, tokens, d_model);
    x_trend = random_mat(rng, tokens, d_model);
    x_season = random_mat(rng, tokens, d_model);
    classifier = random_mat(rng, d_model, classes);
    params = {random_mat(rng, d_model, d_k),      random_mat(rng, d_model, d_k),
              random_mat(rng, d_model, d_v),      random_mat(rng, d_model, d_v),
              random_mat(rng, 1, tokens, -0.5, 0.5), random_mat(rng, 1, tokens, -0.5, 0.5),
              random_mat(rng, d_v, d_model)};
    target = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
  }

  tdafault::ad::Var loss(tdafault::ad::Tape& t, const std::vector<tdafault::ad::Var>& p) const {
    using namespace tdafault::ad;
    const Var xin = t.constant(x);
    const Var q = matmul(xin, p[0]);
    const Var k = matmul(xin, p[1]);
    const Var vt = matmul(t.constant(x_trend), p[2]);
    const Var vs = matmul(t.constant(x_season), p[3]);
    const Var head = tdafault::attention_tda(q, k, vt, vs, exp(p[4]), exp(p[5]));
    const Var y = layer_norm(xin + matmul(head, p[6]));
    return cross_entropy_with_logits(matmul(mean_rows(y), t.constant(classifier)), {target});
  }
};

}  // namespace fixture
