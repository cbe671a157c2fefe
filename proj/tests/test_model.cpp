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

#include "tdafault/model.hpp"

#include <gtest/gtest.h>

#include <cstring>

#include "fixtures.hpp"

namespace tdafault {
namespace {

using ad::Mat;
using fixture::random_mat;

ModelConfig small_config(AttentionKind kind = AttentionKind::tda) {
  ModelConfig c;
  c.seed = 3;
  c.attention = kind;
  return c;
}

Mat tokens(std::uint64_t seed, Index t) {
  Rng rng(seed);
  return random_mat(rng, t, 9, -2, 2);
}

TEST(ModelConfig, ValidatesAndRoundTrips) {
  ModelConfig c = small_config();
  c.d_model = 30;
  c.heads = 4;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.dropout_rate = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config(AttentionKind::standard);
  c.t_max = 12;
  const auto back = ModelConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.attention, AttentionKind::standard);
  EXPECT_THROW(attention_kind_from_string("dense"), std::invalid_argument);
}

TEST(Model, LogitsHaveClassCount) {
  const Model m(small_config());
  for (Index t : {1, 4, 16, 64}) EXPECT_EQ(m.logits(tokens(1, t)).size(), 10);
}

TEST(Model, RejectsBadInputShapes) {
  const Model m(small_config());
  EXPECT_THROW(m.logits(tokens(1, 65)), std::invalid_argument);
  EXPECT_THROW(m.logits(Mat::Zero(4, 8)), std::invalid_argument);
  const Model s(small_config(AttentionKind::standard));
  ForwardOptions opts;
  opts.attention = AttentionKind::tda;
  EXPECT_THROW(s.logits(tokens(1, 4), opts), std::invalid_argument);
}

TEST(Model, TemporalWeightsStartAtZero) {
  const Model m(small_config());
  EXPECT_EQ(m.parameter("layer0.head0.a_trend"), Mat::Zero(1, 64));
  EXPECT_EQ(m.parameter("layer1.head1.a_season"), Mat::Zero(1, 64));
  const Model s(small_config(AttentionKind::standard));
  EXPECT_THROW(s.parameter("layer0.head0.a_trend"), std::invalid_argument);
}

TEST(Model, FreshModelEqualsStandardAttentionEncoder) {
  const Model m(small_config());
  ForwardOptions standard;
  standard.attention = AttentionKind::standard;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Mat x = tokens(s, 12);
    EXPECT_LT((m.logits(x) - m.logits(x, standard)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Model, TrainedTemporalWeightsChangeOutput) {
  Model m(small_config());
  Rng rng(4);
  m.parameter("layer0.head0.a_trend") = random_mat(rng, 1, 64);
  ForwardOptions standard;
  standard.attention = AttentionKind::standard;
  const Mat x = tokens(2, 8);
  EXPECT_GT((m.logits(x) - m.logits(x, standard)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Model, PermutingTokensWithPositionsAndAlphaKeepsLogits) {
  Model m(small_config());
  Rng rng(5);
  for (auto& p : m.parameters())
    if (p.name.find(".a_") != std::string::npos) p.value = random_mat(rng, 1, 64, -0.7, 0.7);
  const Index t = 4;
  const Mat x = tokens(6, t);
  const std::vector<Index> perm = {2, 0, 3, 1};
  const Mat pe = positional_encoding(t, 32);
  Mat x_perm(t, 9), pe_perm(t, 32);
  for (Index i = 0; i < t; ++i) {
    x_perm.row(i) = x.row(perm[i]);
    pe_perm.row(i) = pe.row(perm[i]);
  }
  Model permuted = m;
  for (auto& p : permuted.parameters())
    if (p.name.find(".a_") != std::string::npos) {
      const Mat orig = p.value;
      for (Index i = 0; i < t; ++i) p.value(0, i) = orig(0, perm[i]);
    }
  ForwardOptions opts;
  opts.positional = &pe_perm;
  EXPECT_LT((m.logits(x) - permuted.logits(x_perm, opts)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Model, ArgmaxIgnoresLogitShiftAndPrefersLowestIndex) {
  RowVector<double> v(4);
  v << 0.5, 2.0, -1.0, 2.0;
  EXPECT_EQ(argmax_lowest(v), 1);
  EXPECT_EQ(argmax_lowest((v.array() + 100.0).matrix()), 1);
  EXPECT_EQ(argmax_lowest(RowVector<double>::Zero(3)), 0);
  const Model m(small_config());
  const auto z = m.logits(tokens(9, 5));
  EXPECT_EQ(argmax_lowest(z), argmax_lowest((z.array() - 7.5).matrix()));
}

TEST(Model, FreshModelIsNearUniform) {
  const Model m(small_config());
  ad::Tape t;
  std::vector<ad::Var> vars;
  for (const auto& p : m.parameters()) vars.push_back(t.constant(p.value));
  const auto loss = ad::cross_entropy_with_logits(m.forward(t, vars, tokens(3, 16)), {4});
  EXPECT_NEAR(loss.value()(0, 0), std::log(10.0), 0.2);
}

TEST(Model, SeedDeterminesInitialization) {
  const Model a(small_config()), b(small_config());
  ModelConfig other = small_config();
  other.seed = 4;
  const Model c(other);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_NE(a.parameter("layer0.head0.W_Q"), c.parameter("layer0.head0.W_Q"));
}

TEST(Model, CheckpointRoundTripIsExact) {
  Model m(small_config());
  Rng rng(7);
  m.parameter("layer1.head0.a_season") = random_mat(rng, 1, 64);
  const auto j = m.to_json();
  const Model back = Model::from_json(nlohmann::json::parse(j.dump()));
  ASSERT_EQ(back.parameters().size(), m.parameters().size());
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    const auto& a = m.parameters()[i].value;
    const auto& b = back.parameters()[i].value;
    ASSERT_EQ(a.rows(), b.rows());
    EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()), 0) << m.parameters()[i].name;
  }
  const Mat x = tokens(8, 10);
  EXPECT_EQ(m.logits(x), back.logits(x));
}

TEST(Model, CheckpointErrorsAreFormatErrors) {
  const Model m(small_config());
  auto j = m.to_json();
  j["format_version"] = 99;
  EXPECT_THROW(Model::from_json(j), FormatError);
  j = m.to_json();
  j["parameters"][0]["name"] = "wrong";
  EXPECT_THROW(Model::from_json(j), FormatError);
  j = m.to_json();
  j["parameters"][1]["rows"] = 7;
  EXPECT_THROW(Model::from_json(j), FormatError);
}

TEST(Model, DropoutOnlyWithGenerator) {
  const Model m(small_config());
  ad::Tape t;
  std::vector<ad::Var> vars;
  for (const auto& p : m.parameters()) vars.push_back(t.constant(p.value));
  const Mat x = tokens(2, 8);
  Rng r1(1), r2(1);
  ForwardOptions o1, o2;
  o1.dropout_rng = &r1;
  o2.dropout_rng = &r2;
  const Mat a = m.forward(t, vars, x, o1).value();
  const Mat b = m.forward(t, vars, x, o2).value();
  EXPECT_EQ(a, b);
  EXPECT_GT((a - m.forward(t, vars, x).value()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(PositionalEncoding, SinusoidalTable) {
  const Mat pe = positional_encoding(3, 4);
  EXPECT_EQ(pe(0, 0), 0.0);
  EXPECT_EQ(pe(0, 1), 1.0);
  EXPECT_NEAR(pe(2, 0), std::sin(2.0), 1e-15);
  EXPECT_NEAR(pe(2, 3), std::cos(2.0 / 100.0), 1e-15);
}

}  // namespace
}  // namespace tdafault
