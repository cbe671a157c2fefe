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

#include "tdafault/attention.hpp"

namespace tdafault {

namespace {

void check_attention_shapes(const ad::Var& q, const ad::Var& k, const ad::Var& v, const char* what) {
  detail::require_cols(q.value(), k.value(), what);
  detail::require_rows(k.value(), v.value(), what);
  if (q.rows() < 1) throw std::invalid_argument(std::string(what) + ": empty query");
}

}  // namespace

ad::Var attention_standard(const ad::Var& q, const ad::Var& k, const ad::Var& v) {
  check_attention_shapes(q, k, v, "attention_standard");
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(k.cols()));
  const ad::Var scores = ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt_dk);
  return ad::matmul(ad::row_softmax(scores), v);
}

ad::Var attention_tda(const ad::Var& q, const ad::Var& k, const ad::Var& v_trend, const ad::Var& v_season,
                      const ad::Var& alpha_trend, const ad::Var& alpha_season) {
  check_attention_shapes(q, k, v_trend, "attention_tda");
  check_attention_shapes(q, k, v_season, "attention_tda");
  detail::require_cols(v_trend.value(), v_season.value(), "attention_tda");
  detail::require_positive(alpha_trend.value().row(0), k.rows(), "alpha_trend");
  detail::require_positive(alpha_season.value().row(0), k.rows(), "alpha_season");
  if (alpha_trend.rows() != 1 || alpha_season.rows() != 1)
    throw std::invalid_argument("attention_tda: temporal weights must be row vectors");
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(k.cols()));
  const ad::Var scores = ad::matmul(q, ad::transpose(k));
  const ad::Var w_trend = ad::row_softmax(ad::scale(ad::mul_rows(scores, alpha_trend), inv_sqrt_dk));
  const ad::Var w_season = ad::row_softmax(ad::scale(ad::mul_rows(scores, alpha_season), inv_sqrt_dk));
  return ad::matmul(w_trend, v_trend) + ad::matmul(w_season, v_season);
}

}  // namespace tdafault
