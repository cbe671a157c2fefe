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

#include "tdafault/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tdafault/io.hpp"
#include "tdafault/rng.hpp"

namespace tdafault {

using ad::Mat;
using ad::Var;

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be positive");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be positive");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be non-negative");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0))
    throw std::invalid_argument("TrainConfig: Adam betas must lie in (0, 1)");
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("TrainConfig: adam_epsilon must be positive");
  if (early_stop_patience < 1) throw std::invalid_argument("TrainConfig: early_stop_patience must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},         {"batch_size", batch_size}, {"learning_rate", learning_rate},
          {"adam_beta1", adam_beta1}, {"adam_beta2", adam_beta2}, {"adam_epsilon", adam_epsilon},
          {"seed", seed},             {"early_stop_patience", early_stop_patience}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.seed = j.value("seed", c.seed);
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.validate();
  return c;
}

namespace {

// Loss and gradients of one sample, accumulated into `grads`.
double accumulate_sample(const Model& model, const Sample& s, const ForwardOptions& options, std::vector<Mat>& grads,
                         int* predicted) {
  ad::Tape tape;
  std::vector<Var> vars;
  const auto& params = model.parameters();
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.leaf(p.value, true));
  const Var logits = model.forward(tape, vars, s.tokens, options);
  const Var loss = ad::cross_entropy_with_logits(logits, {s.label});
  tape.backward(loss);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Mat& g = vars[i].grad();
    if (g.size() != 0) grads[i] += g;
  }
  if (predicted != nullptr) *predicted = argmax_lowest(logits.value().row(0));
  return loss.value()(0, 0);
}

class Adam {
 public:
  Adam(const std::vector<Parameter>& params, const TrainConfig& cfg) : cfg_(cfg) {
    for (const auto& p : params) {
      m_.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
    }
  }

  void step(std::vector<Parameter>& params, const std::vector<Mat>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.adam_beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.adam_beta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.adam_beta1 * m_[i] + (1.0 - cfg_.adam_beta1) * grads[i];
      v_[i] = cfg_.adam_beta2 * v_[i] + (1.0 - cfg_.adam_beta2) * grads[i].cwiseProduct(grads[i]);
      const Mat update = (m_[i] / c1).array() / ((v_[i] / c2).array().sqrt() + cfg_.adam_epsilon);
      params[i].value -= cfg_.learning_rate * update;
    }
  }

 private:
  TrainConfig cfg_;
  std::vector<Mat> m_, v_;
  int t_ = 0;
};

void check_split(const std::vector<Sample>& split, const char* name) {
  if (split.empty()) throw std::invalid_argument(std::string("train: ") + name + " split is empty");
}

}  // namespace

SplitLoss mean_loss(const Model& model, const std::vector<Sample>& split, const ForwardOptions& options) {
  if (split.empty()) throw std::invalid_argument("mean_loss: empty split");
  double total = 0.0;
  std::int64_t correct = 0;
  for (const auto& s : split) {
    const RowVector<double> z = model.logits(s.tokens, options);
    const double mx = z.maxCoeff();
    total += mx + std::log((z.array() - mx).exp().sum()) - z(s.label);
    if (argmax_lowest(z) == s.label) ++correct;
  }
  const double n = static_cast<double>(split.size());
  return {total / n, static_cast<double>(correct) / n};
}

TrainResult train(const Model& initial, const std::vector<Sample>& train_split, const std::vector<Sample>& val_split,
                  const TrainConfig& cfg) {
  cfg.validate();
  check_split(train_split, "train");
  check_split(val_split, "validation");
  const Index n_classes = initial.config().n_classes;
  std::vector<bool> present(static_cast<std::size_t>(n_classes), false);
  for (const auto& s : train_split) {
    if (s.label < 0 || s.label >= n_classes)
      throw std::invalid_argument("train: label " + std::to_string(s.label) + " outside the model's classes");
    present[static_cast<std::size_t>(s.label)] = true;
  }
  for (Index c = 0; c < n_classes; ++c)
    if (!present[static_cast<std::size_t>(c)])
      throw std::invalid_argument("train: class " + std::to_string(c) + " is absent from the training split");

  Model model = initial;
  TrainResult result;
  result.initial_train_loss = mean_loss(model, train_split).loss;
  result.model = model;

  Adam adam(model.parameters(), cfg);
  Rng shuffle_rng(derive_seed(cfg.seed, 0x5a1e));
  Rng dropout_rng(derive_seed(cfg.seed, 0xd409));
  ForwardOptions train_opts;
  train_opts.dropout_rng = &dropout_rng;

  std::vector<std::size_t> order(train_split.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  bool first_batch = true;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double batch_loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Mat> grads;
      for (const auto& p : model.parameters()) grads.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
      double loss = 0.0;
      for (std::size_t k = start; k < end; ++k)
        loss += accumulate_sample(model, train_split[order[k]], train_opts, grads, nullptr);
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& g : grads) g *= inv;
      loss *= inv;
      if (!std::isfinite(loss)) throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch));
      if (first_batch) {
        result.first_batch_loss = loss;
        first_batch = false;
      }
      adam.step(model.parameters(), grads);
      batch_loss_sum += loss;
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.batch_loss = batch_loss_sum / batches;
    const auto tr = mean_loss(model, train_split);
    const auto va = mean_loss(model, val_split);
    rec.train_loss = tr.loss;
    rec.train_accuracy = tr.accuracy;
    rec.val_loss = va.loss;
    rec.val_accuracy = va.accuracy;
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss))
      throw NumericalError("train: non-finite evaluation loss at epoch " + std::to_string(epoch));
    result.history.push_back(rec);

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

Evaluation evaluate(const Model& model, const std::vector<Sample>& split, const ForwardOptions& options) {
  if (split.empty()) throw std::invalid_argument("evaluate: empty split");
  Evaluation ev;
  for (const auto& s : split) {
    ev.actual.push_back(s.label);
    ev.predicted.push_back(argmax_lowest(model.logits(s.tokens, options)));
  }
  std::vector<std::string> names;
  const auto standard = fault_class_names();
  for (Index c = 0; c < model.config().n_classes; ++c)
    names.push_back(model.config().n_classes == static_cast<Index>(standard.size()) ? standard[static_cast<std::size_t>(c)]
                                                                                     : "class_" + std::to_string(c));
  ev.report = make_report(ConfusionMatrix::from_pairs(ev.actual, ev.predicted, names));
  return ev;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,train_loss,train_accuracy,batch_loss,val_loss,val_accuracy\n";
  for (const auto& r : history)
    os << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.train_accuracy) << ','
       << format_double(r.batch_loss) << ',' << format_double(r.val_loss) << ',' << format_double(r.val_accuracy)
       << '\n';
  return os.str();
}

}  // namespace tdafault
