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

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdafault/data.hpp"
#include "tdafault/metrics.hpp"
#include "tdafault/model.hpp"

namespace tdafault {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  int early_stop_patience = 10;

  // Learning rate may be 0 (a no-op run); everything else must be positive.
  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;      // eval-mode mean loss on the training split after the epoch
  double train_accuracy = 0;
  double batch_loss = 0;      // mean of the minibatch losses seen during the epoch (dropout active)
  double val_loss = 0;
  double val_accuracy = 0;
};

struct TrainResult {
  Model model;  // parameters from the epoch with the lowest validation loss
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double initial_train_loss = 0;  // before any update
  double first_batch_loss = 0;    // loss of the first minibatch
  bool early_stopped = false;
};

// Adam on the mean cross-entropy; minibatch gradients are reduced in sample
// order so runs are bit-reproducible for a fixed seed.
TrainResult train(const Model& initial, const std::vector<Sample>& train_split, const std::vector<Sample>& val_split,
                  const TrainConfig& cfg);

struct SplitLoss {
  double loss = 0;
  double accuracy = 0;
};
SplitLoss mean_loss(const Model& model, const std::vector<Sample>& split,
                    const ForwardOptions& options = {});

struct Evaluation {
  EvalReport report;
  std::vector<int> actual;
  std::vector<int> predicted;
};

Evaluation evaluate(const Model& model, const std::vector<Sample>& split, const ForwardOptions& options = {});

std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace tdafault
