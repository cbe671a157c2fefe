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

#include <cmath>
#include <stdexcept>

#include "tdafault/attention.hpp"

namespace tdafault {

using ad::Mat;
using ad::Var;

std::string to_string(AttentionKind kind) { return kind == AttentionKind::tda ? "tda" : "standard"; }

AttentionKind attention_kind_from_string(const std::string& s) {
  if (s == "tda") return AttentionKind::tda;
  if (s == "standard") return AttentionKind::standard;
  throw std::invalid_argument("unknown attention kind '" + s + "'");
}

void ModelConfig::validate() const {
  auto positive = [](Index v, const char* name) {
    if (v < 1) throw std::invalid_argument(std::string("ModelConfig: ") + name + " must be positive");
  };
  positive(d_model, "d_model");
  positive(d_k, "d_k");
  positive(d_v, "d_v");
  positive(heads, "heads");
  positive(layers, "layers");
  positive(n_classes, "n_classes");
  positive(t_max, "t_max");
  positive(d_ff, "d_ff");
  positive(residual_features, "residual_features");
  positive(trend_features, "trend_features");
  positive(seasonal_features, "seasonal_features");
  if (d_model % heads != 0) throw std::invalid_argument("ModelConfig: d_model must be divisible by heads");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw std::invalid_argument("ModelConfig: dropout_rate must lie in [0, 1)");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"d_model", d_model},
          {"d_k", d_k},
          {"d_v", d_v},
          {"heads", heads},
          {"layers", layers},
          {"n_classes", n_classes},
          {"t_max", t_max},
          {"d_ff", d_ff},
          {"dropout_rate", dropout_rate},
          {"seed", seed},
          {"attention", to_string(attention)},
          {"residual_features", residual_features},
          {"trend_features", trend_features},
          {"seasonal_features", seasonal_features}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.d_model = j.value("d_model", c.d_model);
  c.d_k = j.value("d_k", c.d_k);
  c.d_v = j.value("d_v", c.d_v);
  c.heads = j.value("heads", c.heads);
  c.layers = j.value("layers", c.layers);
  c.n_classes = j.value("n_classes", c.n_classes);
  c.t_max = j.value("t_max", c.t_max);
  c.d_ff = j.value("d_ff", c.d_ff);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  c.seed = j.value("seed", c.seed);
  if (j.contains("attention")) c.attention = attention_kind_from_string(j.at("attention").get<std::string>());
  c.residual_features = j.value("residual_features", c.residual_features);
  c.trend_features = j.value("trend_features", c.trend_features);
  c.seasonal_features = j.value("seasonal_features", c.seasonal_features);
  c.validate();
  return c;
}

Mat positional_encoding(Index length, Index d_model) {
  Mat pe(length, d_model);
  for (Index pos = 0; pos < length; ++pos) {
    for (Index i = 0; i < d_model; ++i) {
      const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

int argmax_lowest(const RowVector<double>& v) {
  int best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = static_cast<int>(i);
  return best;
}

namespace {

Mat xavier(Rng* rng, Index rows, Index cols) {
  if (rng == nullptr) return Mat::Zero(rows, cols);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = rng->uniform(-limit, limit);
  return m;
}

}  // namespace

int Model::add_param(std::string name, Mat value) {
  params_.push_back({std::move(name), std::move(value)});
  return static_cast<int>(params_.size() - 1);
}

void Model::build_layout(Rng* init) {
  const auto& c = config_;
  params_.clear();
  layers_.clear();
  emb_res_w_ = add_param("embed.residual.W", xavier(init, c.residual_features, c.d_model));
  emb_res_b_ = add_param("embed.residual.b", Mat::Zero(1, c.d_model));
  emb_tr_w_ = add_param("embed.trend.W", xavier(init, c.trend_features, c.d_model));
  emb_tr_b_ = add_param("embed.trend.b", Mat::Zero(1, c.d_model));
  emb_se_w_ = add_param("embed.seasonal.W", xavier(init, c.seasonal_features, c.d_model));
  emb_se_b_ = add_param("embed.seasonal.b", Mat::Zero(1, c.d_model));
  for (Index l = 0; l < c.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerSlots slots;
    for (Index h = 0; h < c.heads; ++h) {
      const std::string hp = p + "head" + std::to_string(h) + ".";
      HeadSlots hs{};
      hs.w_q = add_param(hp + "W_Q", xavier(init, c.d_model, c.d_k));
      hs.w_k = add_param(hp + "W_K", xavier(init, c.d_model, c.d_k));
      hs.w_vt = add_param(hp + "W_Vt", xavier(init, c.d_model, c.d_v));
      hs.w_vs = add_param(hp + "W_Vs", xavier(init, c.d_model, c.d_v));
      if (c.attention == AttentionKind::tda) {
        hs.a_trend = add_param(hp + "a_trend", Mat::Zero(1, c.t_max));
        hs.a_season = add_param(hp + "a_season", Mat::Zero(1, c.t_max));
      } else {
        hs.a_trend = hs.a_season = -1;
      }
      hs.w_o = add_param(hp + "W_O", xavier(init, c.d_v, c.d_model));
      slots.heads.push_back(hs);
    }
    slots.b_o = add_param(p + "b_O", Mat::Zero(1, c.d_model));
    slots.ln1_gamma = add_param(p + "ln1.gamma", Mat::Ones(1, c.d_model));
    slots.ln1_beta = add_param(p + "ln1.beta", Mat::Zero(1, c.d_model));
    slots.ffn_w1 = add_param(p + "ffn.W1", xavier(init, c.d_model, c.d_ff));
    slots.ffn_b1 = add_param(p + "ffn.b1", Mat::Zero(1, c.d_ff));
    slots.ffn_w2 = add_param(p + "ffn.W2", xavier(init, c.d_ff, c.d_model));
    slots.ffn_b2 = add_param(p + "ffn.b2", Mat::Zero(1, c.d_model));
    slots.ln2_gamma = add_param(p + "ln2.gamma", Mat::Ones(1, c.d_model));
    slots.ln2_beta = add_param(p + "ln2.beta", Mat::Zero(1, c.d_model));
    layers_.push_back(std::move(slots));
  }
  // Small head so a fresh model starts near uniform class probabilities.
  cls_w_ = add_param("classifier.W", 0.1 * xavier(init, c.d_model, c.n_classes));
  cls_b_ = add_param("classifier.b", Mat::Zero(1, c.n_classes));
}

Model::Model(const ModelConfig& cfg) : config_(cfg) {
  config_.validate();
  Rng init(derive_seed(cfg.seed, 0x1417));
  build_layout(&init);
}

Mat& Model::parameter(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p.value;
  throw std::invalid_argument("Model: no parameter named '" + name + "'");
}

const Mat& Model::parameter(const std::string& name) const {
  return const_cast<Model*>(this)->parameter(name);
}

Var Model::forward(ad::Tape& tape, const std::vector<Var>& vars, const Mat& tokens,
                   const ForwardOptions& options) const {
  const auto& c = config_;
  if (vars.size() != params_.size())
    throw std::invalid_argument("Model::forward: expected " + std::to_string(params_.size()) +
                                " parameter variables, got " + std::to_string(vars.size()));
  const Index t = tokens.rows();
  if (t < 1 || t > c.t_max)
    throw std::invalid_argument("Model::forward: sequence length " + std::to_string(t) + " outside [1, " +
                                std::to_string(c.t_max) + "]");
  if (tokens.cols() != c.feature_width())
    throw std::invalid_argument("Model::forward: token width " + std::to_string(tokens.cols()) + ", expected " +
                                std::to_string(c.feature_width()));
  const AttentionKind kind = options.attention.value_or(c.attention);
  if (kind == AttentionKind::tda && c.attention != AttentionKind::tda)
    throw std::invalid_argument("Model::forward: standard-attention model has no temporal weights");

  auto P = [&vars](int slot) -> const Var& { return vars[static_cast<std::size_t>(slot)]; };
  auto linear = [&](const Var& x, int w, int b) { return ad::matmul(x, P(w)) + P(b); };
  auto affine_norm = [&](const Var& x, int gamma, int beta) {
    return ad::mul_rows(ad::layer_norm(x), P(gamma)) + P(beta);
  };
  auto dropout = [&](const Var& x) {
    if (options.dropout_rng == nullptr || c.dropout_rate <= 0.0) return x;
    const double keep = 1.0 - c.dropout_rate;
    Mat mask(x.rows(), x.cols());
    for (Index i = 0; i < mask.size(); ++i)
      mask(i) = options.dropout_rng->uniform() < c.dropout_rate ? 0.0 : 1.0 / keep;
    return ad::multiply(x, tape.constant(std::move(mask)));
  };

  Mat pos;
  if (options.positional != nullptr) {
    if (options.positional->rows() != t || options.positional->cols() != c.d_model)
      throw std::invalid_argument("Model::forward: positional table has shape " +
                                  ad::shape_string(*options.positional));
    pos = *options.positional;
  } else {
    pos = positional_encoding(t, c.d_model);
  }

  const Var res_in = tape.constant(tokens.leftCols(c.residual_features));
  const Var tr_in = tape.constant(tokens.middleCols(c.residual_features, c.trend_features));
  const Var se_in = tape.constant(tokens.rightCols(c.seasonal_features));

  Var x = linear(res_in, emb_res_w_, emb_res_b_) + tape.constant(std::move(pos));
  const Var x_trend = linear(tr_in, emb_tr_w_, emb_tr_b_);
  const Var x_season = linear(se_in, emb_se_w_, emb_se_b_);

  Var select;
  if (kind == AttentionKind::tda) select = tape.constant(Mat::Identity(c.t_max, t));

  for (const auto& layer : layers_) {
    Var mixed;
    for (std::size_t h = 0; h < layer.heads.size(); ++h) {
      const auto& hs = layer.heads[h];
      const Var q = ad::matmul(x, P(hs.w_q));
      const Var k = ad::matmul(x, P(hs.w_k));
      const Var v_trend = ad::matmul(x_trend, P(hs.w_vt));
      const Var v_season = ad::matmul(x_season, P(hs.w_vs));
      Var head;
      if (kind == AttentionKind::tda) {
        const Var alpha_trend = ad::matmul(ad::exp(P(hs.a_trend)), select);
        const Var alpha_season = ad::matmul(ad::exp(P(hs.a_season)), select);
        head = attention_tda(q, k, v_trend, v_season, alpha_trend, alpha_season);
      } else {
        head = attention_standard(q, k, v_trend + v_season);
      }
      const Var projected = ad::matmul(head, P(hs.w_o));
      mixed = h == 0 ? projected : mixed + projected;
    }
    const Var attn = dropout(mixed + P(layer.b_o));
    x = affine_norm(x + attn, layer.ln1_gamma, layer.ln1_beta);
    const Var hidden = ad::gelu(linear(x, layer.ffn_w1, layer.ffn_b1));
    const Var ffn = dropout(linear(hidden, layer.ffn_w2, layer.ffn_b2));
    x = affine_norm(x + ffn, layer.ln2_gamma, layer.ln2_beta);
  }
  return linear(ad::mean_rows(x), cls_w_, cls_b_);
}

RowVector<double> Model::logits(const Mat& tokens, const ForwardOptions& options) const {
  ad::Tape tape;
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (const auto& p : params_) vars.push_back(tape.constant(p.value));
  ForwardOptions eval = options;
  eval.dropout_rng = nullptr;
  return forward(tape, vars, tokens, eval).value().row(0);
}

int Model::predict(const Mat& tokens) const { return argmax_lowest(logits(tokens)); }

nlohmann::json Model::to_json() const {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : params_) {
    std::vector<double> data(static_cast<std::size_t>(p.value.size()));
    for (Index r = 0, i = 0; r < p.value.rows(); ++r)
      for (Index c = 0; c < p.value.cols(); ++c, ++i) data[static_cast<std::size_t>(i)] = p.value(r, c);
    params.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}, {"data", data}});
  }
  return {{"format_version", kCheckpointFormatVersion}, {"config", config_.to_json()}, {"parameters", params}};
}

Model Model::from_json(const nlohmann::json& j) {
  if (j.value("format_version", 0) != kCheckpointFormatVersion)
    throw FormatError("checkpoint: unsupported format version");
  Model m;
  m.config_ = ModelConfig::from_json(j.at("config"));
  m.build_layout(nullptr);
  const auto& params = j.at("parameters");
  if (params.size() != m.params_.size())
    throw FormatError("checkpoint: expected " + std::to_string(m.params_.size()) + " parameters, found " +
                      std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& pj = params[i];
    auto& dst = m.params_[i];
    if (pj.at("name").get<std::string>() != dst.name)
      throw FormatError("checkpoint: parameter " + std::to_string(i) + " is '" + pj.at("name").get<std::string>() +
                        "', expected '" + dst.name + "'");
    const Index rows = pj.at("rows").get<Index>();
    const Index cols = pj.at("cols").get<Index>();
    const auto data = pj.at("data").get<std::vector<double>>();
    if (rows != dst.value.rows() || cols != dst.value.cols() || static_cast<Index>(data.size()) != rows * cols)
      throw FormatError("checkpoint: parameter '" + dst.name + "' has the wrong shape");
    for (Index r = 0, k = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c, ++k) dst.value(r, c) = data[static_cast<std::size_t>(k)];
  }
  return m;
}

}  // namespace tdafault
