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

// Scaled dot-product attention and its trend/seasonal decomposed variant.
//
// The decomposed form runs two softmax branches over the same score matrix
// S = Q K^T. Each branch scales column j of S (key position j) by a positive
// temporal weight before the 1/sqrt(d_k) scaling, and attends over its own
// value matrix; the branch outputs are summed:
//
//   softmax((S . diag(a_trend)) / sqrt(d_k)) V_trend
//     + softmax((S . diag(a_season)) / sqrt(d_k)) V_season

#include <cmath>
#include <stdexcept>
#include <string>

#include "tdafault/autodiff.hpp"
#include "tdafault/types.hpp"

namespace tdafault {

template <typename Derived>
Matrix<typename Derived::Scalar> row_softmax(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> y = (x.colwise() - x.rowwise().maxCoeff()).array().exp().matrix();
  y.array().colwise() /= y.rowwise().sum().array();
  return y;
}

namespace detail {

inline std::string dims(Index r, Index c) { return "(" + std::to_string(r) + "x" + std::to_string(c) + ")"; }

template <typename A, typename B>
void require_rows(const A& a, const B& b, const char* what) {
  if (a.rows() != b.rows())
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + dims(a.rows(), a.cols()) + " vs " +
                                dims(b.rows(), b.cols()));
}

template <typename A, typename B>
void require_cols(const A& a, const B& b, const char* what) {
  if (a.cols() != b.cols())
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + dims(a.rows(), a.cols()) + " vs " +
                                dims(b.rows(), b.cols()));
}

template <typename Alpha>
void require_positive(const Alpha& alpha, Index t, const char* which) {
  if (alpha.size() != t)
    throw std::invalid_argument(std::string("attention_tda: ") + which + " has " + std::to_string(alpha.size()) +
                                " entries, expected " + std::to_string(t));
  for (Index j = 0; j < alpha.size(); ++j)
    if (!(alpha(j) > 0))
      throw std::invalid_argument(std::string("attention_tda: ") + which + " entry " + std::to_string(j) +
                                  " is not strictly positive");
}

}  // namespace detail

// softmax(Q K^T / sqrt(d_k)) V
template <typename Scalar>
Matrix<Scalar> attention_standard(const Matrix<Scalar>& q, const Matrix<Scalar>& k, const Matrix<Scalar>& v) {
  detail::require_cols(q, k, "attention_standard");
  detail::require_rows(k, v, "attention_standard");
  if (q.rows() < 1) throw std::invalid_argument("attention_standard: empty query");
  const Scalar inv_sqrt_dk = Scalar(1) / std::sqrt(Scalar(k.cols()));
  return row_softmax((q * k.transpose()) * inv_sqrt_dk) * v;
}

template <typename Scalar>
struct TdaWeights {
  Matrix<Scalar> trend;   // row-stochastic T x T
  Matrix<Scalar> season;  // row-stochastic T x T
};

// Softmax weight matrices of both branches.
template <typename Scalar>
TdaWeights<Scalar> attention_tda_weights(const Matrix<Scalar>& q, const Matrix<Scalar>& k,
                                         const RowVector<Scalar>& alpha_trend,
                                         const RowVector<Scalar>& alpha_season) {
  detail::require_cols(q, k, "attention_tda");
  detail::require_positive(alpha_trend, k.rows(), "alpha_trend");
  detail::require_positive(alpha_season, k.rows(), "alpha_season");
  const Scalar inv_sqrt_dk = Scalar(1) / std::sqrt(Scalar(k.cols()));
  const Matrix<Scalar> scores = q * k.transpose();
  TdaWeights<Scalar> w;
  w.trend = row_softmax(((scores.array().rowwise() * alpha_trend.array()) * inv_sqrt_dk).matrix());
  w.season = row_softmax(((scores.array().rowwise() * alpha_season.array()) * inv_sqrt_dk).matrix());
  return w;
}

template <typename Scalar>
Matrix<Scalar> attention_tda(const Matrix<Scalar>& q, const Matrix<Scalar>& k, const Matrix<Scalar>& v_trend,
                             const Matrix<Scalar>& v_season, const RowVector<Scalar>& alpha_trend,
                             const RowVector<Scalar>& alpha_season) {
  detail::require_rows(k, v_trend, "attention_tda");
  detail::require_rows(k, v_season, "attention_tda");
  detail::require_cols(v_trend, v_season, "attention_tda");
  if (q.rows() < 1) throw std::invalid_argument("attention_tda: empty query");
  const auto w = attention_tda_weights(q, k, alpha_trend, alpha_season);
  return w.trend * v_trend + w.season * v_season;
}

// Differentiable counterparts used inside the encoder.
ad::Var attention_standard(const ad::Var& q, const ad::Var& k, const ad::Var& v);
ad::Var attention_tda(const ad::Var& q, const ad::Var& k, const ad::Var& v_trend, const ad::Var& v_season,
                      const ad::Var& alpha_trend, const ad::Var& alpha_season);

}  // namespace tdafault
