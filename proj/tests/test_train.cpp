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

#include <gtest/gtest.h>

#include <cstring>

#include "tdafault/data.hpp"

namespace tdafault {
namespace {

using ad::Mat;

// Two perfectly separable classes: every feature near -1 or near +1.
std::vector<Sample> toy_split(std::uint64_t seed, int per_class) {
  Rng rng(seed);
  std::vector<Sample> out;
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < per_class; ++i) {
      Mat t(4, 9);
      for (Index k = 0; k < t.size(); ++k) t(k) = (c == 0 ? -1.0 : 1.0) + rng.uniform(-0.3, 0.3);
      out.push_back({t, c, "toy" + std::to_string(c), i});
    }
  return out;
}

ModelConfig toy_model(std::uint64_t seed = 1) {
  ModelConfig c;
  c.n_classes = 2;
  c.seed = seed;
  return c;
}

Mat fixture_tokens(Rng& rng) {
  Mat t(4, 9);
  for (Index k = 0; k < t.size(); ++k) t(k) = rng.uniform(-1, 1);
  return t;
}

bool same_parameters(const Model& a, const Model& b) {
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    const auto& x = a.parameters()[i].value;
    const auto& y = b.parameters()[i].value;
    if (x.size() != y.size() || std::memcmp(x.data(), y.data(), sizeof(double) * x.size()) != 0) return false;
  }
  return true;
}

TEST(TrainConfig, Validates) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.learning_rate = 0.0;
  EXPECT_NO_THROW(c.validate());
  c.learning_rate = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.adam_beta1 = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.epochs = 7;
  c.seed = 11;
  EXPECT_EQ(TrainConfig::from_json(c.to_json()).to_json(), c.to_json());
}

TEST(Train, SeparableToyReachesPerfectTrainAccuracy) {
  const auto tr = toy_split(1, 16), val = toy_split(2, 4);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 8;
  cfg.seed = 3;
  const auto r = train(Model(toy_model()), tr, val, cfg);
  double best = 0;
  for (const auto& e : r.history) best = std::max(best, e.train_accuracy);
  EXPECT_EQ(best, 1.0);
  EXPECT_EQ(evaluate(r.model, tr).report.accuracy, 1.0);
}

TEST(Train, ZeroLearningRateLeavesParametersUntouched) {
  const Model m(toy_model());
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 0.0;
  const auto r = train(m, toy_split(1, 8), toy_split(2, 2), cfg);
  EXPECT_TRUE(same_parameters(m, r.model));
}

TEST(Train, SameSeedIsBitIdentical) {
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 5;
  cfg.seed = 9;
  const auto a = train(Model(toy_model()), toy_split(1, 8), toy_split(2, 2), cfg);
  const auto b = train(Model(toy_model()), toy_split(1, 8), toy_split(2, 2), cfg);
  EXPECT_EQ(history_csv(a.history), history_csv(b.history));
  EXPECT_TRUE(same_parameters(a.model, b.model));
  EXPECT_EQ(a.model.to_json().dump(), b.model.to_json().dump());
}

TEST(Train, ReturnsBestValidationCheckpoint) {
  TrainConfig cfg;
  cfg.epochs = 12;
  cfg.batch_size = 4;
  const auto r = train(Model(toy_model()), toy_split(1, 8), toy_split(2, 3), cfg);
  double best = 1e300;
  int best_epoch = 0;
  for (const auto& e : r.history)
    if (e.val_loss < best) {
      best = e.val_loss;
      best_epoch = e.epoch;
    }
  EXPECT_EQ(r.best_epoch, best_epoch);
  EXPECT_DOUBLE_EQ(mean_loss(r.model, toy_split(2, 3)).loss, best);
}

TEST(Train, EarlyStopsOnStagnantValidation) {
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.early_stop_patience = 2;
  cfg.learning_rate = 0.0;
  const auto r = train(Model(toy_model()), toy_split(1, 4), toy_split(2, 2), cfg);
  EXPECT_TRUE(r.early_stopped);
  EXPECT_EQ(r.history.size(), 3u);
}

TEST(Train, RejectsEmptySplitsAndMissingClasses) {
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train(Model(toy_model()), {}, toy_split(2, 1), cfg), std::invalid_argument);
  EXPECT_THROW(train(Model(toy_model()), toy_split(1, 2), {}, cfg), std::invalid_argument);
  auto only_zero = toy_split(1, 3);
  only_zero.resize(3);
  EXPECT_THROW(train(Model(toy_model()), only_zero, toy_split(2, 1), cfg), std::invalid_argument);
  auto bad_label = toy_split(1, 2);
  bad_label[0].label = 5;
  EXPECT_THROW(train(Model(toy_model()), bad_label, toy_split(2, 1), cfg), std::invalid_argument);
}

TEST(Evaluate, ConstantPredictorOnBalancedSplit) {
  Model m(ModelConfig{});
  m.parameter("classifier.W").setZero();
  m.parameter("classifier.b")(0, 0) = 5.0;
  std::vector<Sample> split;
  Rng rng(1);
  for (int c = 0; c < 10; ++c)
    for (int i = 0; i < 3; ++i) split.push_back({fixture_tokens(rng), c, "r", i});
  const auto ev = evaluate(m, split);
  EXPECT_DOUBLE_EQ(ev.report.accuracy, 0.1);
  for (int p : ev.predicted) EXPECT_EQ(p, 0);
  EXPECT_THROW(evaluate(m, {}), std::invalid_argument);
}

class SyntheticTraining : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    std::vector<Recording> recs;
    SyntheticConfig sc;
    sc.duration_s = 4.0;
    for (int c = 0; c < 10; ++c)
      for (int k = 0; k < 3; ++k) {
        const auto& fc = fault_classes()[static_cast<std::size_t>(c)];
        recs.push_back({fc.name + "_" + std::to_string(k), gen_synthetic(fc, derive_seed(21, c * 10 + k), sc), c});
      }
    PipelineConfig pc;
    pc.sequence_length = 8;
    pc.sequence_stride = 8;
    data_ = new Dataset(build_dataset(recs, pc, 21));
  }
  static void TearDownTestSuite() { delete data_; }
  static Dataset* data_;
};

Dataset* SyntheticTraining::data_ = nullptr;

TEST_F(SyntheticTraining, FirstBatchLossIsNearLogTen) {
  ModelConfig mc;
  mc.seed = 21;
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 21;
  const auto r = train(Model(mc), data_->train, data_->val, cfg);
  EXPECT_NEAR(r.first_batch_loss, std::log(10.0), 0.2);
  EXPECT_NEAR(r.initial_train_loss, std::log(10.0), 0.2);
}

TEST_F(SyntheticTraining, TrainingLossMostlyDecreasesEarly) {
  ModelConfig mc;
  mc.seed = 21;
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 21;
  const auto r = train(Model(mc), data_->train, data_->val, cfg);
  ASSERT_EQ(r.history.size(), 5u);
  int down = 0;
  double prev = r.initial_train_loss;
  for (const auto& e : r.history) {
    if (e.train_loss <= prev) ++down;
    prev = e.train_loss;
  }
  EXPECT_GE(down, 4);
}

TEST_F(SyntheticTraining, CheckpointRoundTripReproducesMetrics) {
  ModelConfig mc;
  mc.seed = 22;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 22;
  const auto r = train(Model(mc), data_->train, data_->val, cfg);
  const Model back = Model::from_json(nlohmann::json::parse(r.model.to_json().dump()));
  const auto a = evaluate(r.model, data_->test);
  const auto b = evaluate(back, data_->test);
  EXPECT_EQ(a.report.to_json().dump(), b.report.to_json().dump());
  EXPECT_EQ(a.predicted, b.predicted);
}

TEST(HistoryCsv, HeaderAndRows) {
  std::vector<EpochRecord> h = {{1, 0.5, 0.75, 0.6, 0.4, 1.0}};
  EXPECT_EQ(history_csv(h), "epoch,train_loss,train_accuracy,batch_loss,val_loss,val_accuracy\n1,0.5,0.75,0.6,0.4,1\n");
}

}  // namespace
}  // namespace tdafault
