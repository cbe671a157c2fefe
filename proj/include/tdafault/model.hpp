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

// Transformer encoder classifier over per-window feature tokens.
//
// Residual-channel features (plus sinusoidal positions) form the stream that
// produces queries and keys. Trend and seasonal channels are embedded
// separately and supply the two value streams of the decomposed attention.
// Each layer: multi-head attention, output projection, residual + layer
// norm, GELU feed-forward, residual + layer norm. Tokens are mean-pooled and
// mapped to class logits.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdafault/autodiff.hpp"
#include "tdafault/rng.hpp"
#include "tdafault/types.hpp"

namespace tdafault {

enum class AttentionKind { tda, standard };

std::string to_string(AttentionKind kind);
AttentionKind attention_kind_from_string(const std::string& s);

struct ModelConfig {
  Index d_model = 32;
  Index d_k = 16;  // per head
  Index d_v = 16;  // per head
  Index heads = 2;
  Index layers = 2;
  Index n_classes = 10;
  Index t_max = 64;
  Index d_ff = 64;
  double dropout_rate = 0.1;
  std::uint64_t seed = 0;
  AttentionKind attention = AttentionKind::tda;
  Index residual_features = 5;
  Index trend_features = 2;
  Index seasonal_features = 2;

  Index feature_width() const { return residual_features + trend_features + seasonal_features; }
  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

struct Parameter {
  std::string name;
  ad::Mat value;
};

// Sinusoidal position table, T x d_model.
ad::Mat positional_encoding(Index length, Index d_model);

struct ForwardOptions {
  // Run the attention blocks as a different kind than the model was built
  // with. Only tda -> standard is possible (standard models carry no
  // temporal weights).
  std::optional<AttentionKind> attention;
  // Replaces the sinusoidal table; must be T x d_model.
  const ad::Mat* positional = nullptr;
  // Non-null enables dropout with masks drawn from this generator.
  Rng* dropout_rng = nullptr;
};

class Model {
 public:
  Model() = default;
  // Xavier-uniform projections seeded by cfg.seed; temporal weight logits at 0.
  explicit Model(const ModelConfig& cfg);

  const ModelConfig& config() const { return config_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  ad::Mat& parameter(const std::string& name);
  const ad::Mat& parameter(const std::string& name) const;

  // Builds the forward graph on `tape`; `vars` are the parameter leaves in
  // parameters() order. Returns 1 x n_classes logits.
  ad::Var forward(ad::Tape& tape, const std::vector<ad::Var>& vars, const ad::Mat& tokens,
                  const ForwardOptions& options = {}) const;

  // Inference without gradient tracking.
  RowVector<double> logits(const ad::Mat& tokens, const ForwardOptions& options = {}) const;
  int predict(const ad::Mat& tokens) const;

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& j);

 private:
  struct HeadSlots {
    int w_q, w_k, w_vt, w_vs, a_trend, a_season, w_o;
  };
  struct LayerSlots {
    std::vector<HeadSlots> heads;
    int b_o, ln1_gamma, ln1_beta, ffn_w1, ffn_b1, ffn_w2, ffn_b2, ln2_gamma, ln2_beta;
  };
  int add_param(std::string name, ad::Mat value);
  void build_layout(Rng* init);

  ModelConfig config_;
  std::vector<Parameter> params_;
  int emb_res_w_ = -1, emb_res_b_ = -1, emb_tr_w_ = -1, emb_tr_b_ = -1, emb_se_w_ = -1, emb_se_b_ = -1;
  int cls_w_ = -1, cls_b_ = -1;
  std::vector<LayerSlots> layers_;
};

// argmax with ties going to the lowest index.
int argmax_lowest(const RowVector<double>& v);

inline constexpr int kCheckpointFormatVersion = 1;

}  // namespace tdafault
