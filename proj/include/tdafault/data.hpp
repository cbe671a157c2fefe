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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdafault/decompose.hpp"
#include "tdafault/features.hpp"
#include "tdafault/movavg.hpp"
#include "tdafault/types.hpp"

namespace tdafault {

enum class FaultLocation { inner_race, outer_race, ball, none };

std::string to_string(FaultLocation loc);

struct FaultClass {
  std::string name;
  FaultLocation location = FaultLocation::none;
  double severity_inch = 0.0;
};

// The nine seeded-fault classes (inner race, outer race, ball at 0.007,
// 0.014, 0.021 in) followed by Normal_1. The position is the class index.
const std::vector<FaultClass>& fault_classes();
std::vector<std::string> fault_class_names();
// Throws std::invalid_argument for unknown names.
int fault_class_index(const std::string& name);
const FaultClass& fault_class(const std::string& name);

inline constexpr double kShaftRpm = 1772.0;

// Defect repetition rate as a multiple of the shaft rate.
double defect_rate_multiplier(FaultLocation loc);

struct SyntheticConfig {
  double sample_rate_hz = 4096.0;
  double duration_s = 8.0;
  double noise_sigma = 0.1;
  double shaft_amplitude = 1.0;
  // Peak burst amplitude per inch of defect diameter.
  double impulse_gain_per_inch = 1.0 / 0.007;
  // Exponential decay time of each burst.
  double burst_decay_s = 0.0015;
  // Resonance excited by each impact, as a fraction of the sample rate.
  double resonance_fraction = 0.23;

  void validate() const;
  nlohmann::json to_json() const;
  static SyntheticConfig from_json(const nlohmann::json& j);
};

// Shaft rate used by the generator: the nominal 1772 rpm rounded so that one
// revolution is a whole number of samples.
double synthetic_shaft_hz(double sample_rate_hz);

// Shaft sine plus, for fault classes, a periodic train of exponentially
// decaying resonance bursts at the location's defect rate with amplitude
// proportional to severity, plus Gaussian noise. Fully determined by seed.
TimeSeries gen_synthetic(const FaultClass& cls, std::uint64_t seed, const SyntheticConfig& cfg = {});
// Impulse component alone (no shaft, no noise) for the same seed.
Vector<double> synthetic_impulses(const FaultClass& cls, std::uint64_t seed, const SyntheticConfig& cfg = {});

struct Recording {
  std::string name;
  TimeSeries series;
  int class_index = 0;
};

enum class SplitGrouping { automatic, recording, block };

std::string to_string(SplitGrouping g);
SplitGrouping split_grouping_from_string(const std::string& s);

struct SplitConfig {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
  // automatic: recording-level grouping when every class has at least three
  // recordings, chronological blocks within each recording otherwise.
  SplitGrouping grouping = SplitGrouping::automatic;

  void validate() const;
};

struct PipelineConfig {
  // Decomposition period in samples; defaults to the shaft period.
  std::optional<Index> period;
  WindowSpec window;
  MaConfig ma;
  Index sequence_length = 16;  // tokens per classifier sample
  Index sequence_stride = 16;
  SplitConfig split;

  void validate() const;
  Index period_for(double sample_rate_hz) const;
  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
};

// Tokens of one recording before standardization.
struct RecordingTokens {
  std::string name;
  int class_index = 0;
  Matrix<double> tokens;
  std::string source_sha256;  // hash of the raw samples, when known
};

struct Sample {
  Matrix<double> tokens;
  int label = 0;
  std::string recording;
  Index first_window = 0;
};

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
  Standardizer standardizer;
  nlohmann::json manifest;
};

// Decompose then featurize one recording.
RecordingTokens tokenize_recording(const Recording& rec, const PipelineConfig& cfg);

// Stratified split of tokenized recordings, standardization fitted on the
// training windows. `n_classes` classes must all be represented.
Dataset build_splits(const std::vector<RecordingTokens>& recordings, const PipelineConfig& cfg, std::uint64_t seed,
                     int n_classes = 10);

// tokenize_recording over every source, then build_splits. Recordings are
// processed in parallel up to `threads` workers; results keep input order.
Dataset build_dataset(const std::vector<Recording>& sources, const PipelineConfig& cfg, std::uint64_t seed,
                      int n_classes = 10, unsigned threads = 1);

}  // namespace tdafault
