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

#include "tdafault/data.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "tdafault/io.hpp"
#include "tdafault/rng.hpp"

namespace tdafault {

std::string to_string(FaultLocation loc) {
  switch (loc) {
    case FaultLocation::inner_race: return "inner_race";
    case FaultLocation::outer_race: return "outer_race";
    case FaultLocation::ball: return "ball";
    case FaultLocation::none: return "none";
  }
  return "none";
}

const std::vector<FaultClass>& fault_classes() {
  static const std::vector<FaultClass> classes = {
      {"IR_007_1", FaultLocation::inner_race, 0.007},   {"IR_014_1", FaultLocation::inner_race, 0.014},
      {"IR_021_1", FaultLocation::inner_race, 0.021},   {"OR_007_6_1", FaultLocation::outer_race, 0.007},
      {"OR_014_6_1", FaultLocation::outer_race, 0.014}, {"OR_021_6_1", FaultLocation::outer_race, 0.021},
      {"Ball_007_1", FaultLocation::ball, 0.007},       {"Ball_014_1", FaultLocation::ball, 0.014},
      {"Ball_021_1", FaultLocation::ball, 0.021},       {"Normal_1", FaultLocation::none, 0.0},
  };
  return classes;
}

std::vector<std::string> fault_class_names() {
  std::vector<std::string> names;
  for (const auto& c : fault_classes()) names.push_back(c.name);
  return names;
}

int fault_class_index(const std::string& name) {
  const auto& classes = fault_classes();
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i].name == name) return static_cast<int>(i);
  throw std::invalid_argument("unknown fault class '" + name + "'");
}

const FaultClass& fault_class(const std::string& name) {
  return fault_classes()[static_cast<std::size_t>(fault_class_index(name))];
}

double defect_rate_multiplier(FaultLocation loc) {
  switch (loc) {
    case FaultLocation::inner_race: return 5.4;
    case FaultLocation::outer_race: return 3.6;
    case FaultLocation::ball: return 4.7;
    case FaultLocation::none: return 0.0;
  }
  return 0.0;
}

void SyntheticConfig::validate() const {
  if (!(sample_rate_hz >= 1024.0)) throw std::invalid_argument("synthetic: sample rate must be >= 1024 Hz");
  if (!(duration_s >= 1.0)) throw std::invalid_argument("synthetic: duration must be >= 1 s");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("synthetic: noise sigma must be non-negative");
  if (!(burst_decay_s > 0.0)) throw std::invalid_argument("synthetic: burst decay must be positive");
  if (!(resonance_fraction > 0.0 && resonance_fraction < 0.5))
    throw std::invalid_argument("synthetic: resonance must lie below Nyquist");
}

nlohmann::json SyntheticConfig::to_json() const {
  return {{"sample_rate_hz", sample_rate_hz},     {"duration_s", duration_s},
          {"noise_sigma", noise_sigma},           {"shaft_amplitude", shaft_amplitude},
          {"impulse_gain_per_inch", impulse_gain_per_inch}, {"burst_decay_s", burst_decay_s},
          {"resonance_fraction", resonance_fraction}};
}

SyntheticConfig SyntheticConfig::from_json(const nlohmann::json& j) {
  SyntheticConfig c;
  c.sample_rate_hz = j.value("sample_rate_hz", c.sample_rate_hz);
  c.duration_s = j.value("duration_s", c.duration_s);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.shaft_amplitude = j.value("shaft_amplitude", c.shaft_amplitude);
  c.impulse_gain_per_inch = j.value("impulse_gain_per_inch", c.impulse_gain_per_inch);
  c.burst_decay_s = j.value("burst_decay_s", c.burst_decay_s);
  c.resonance_fraction = j.value("resonance_fraction", c.resonance_fraction);
  c.validate();
  return c;
}

double synthetic_shaft_hz(double sample_rate_hz) {
  return sample_rate_hz / static_cast<double>(shaft_period_samples(sample_rate_hz, kShaftRpm));
}

namespace {

struct SyntheticDraws {
  double shaft_phase;
  double impulse_fraction;
};

SyntheticDraws draw_phases(Rng& rng) {
  const double shaft_phase = 2.0 * std::numbers::pi * rng.uniform();
  const double impulse_fraction = rng.uniform();
  return {shaft_phase, impulse_fraction};
}

Vector<double> impulse_train(const FaultClass& cls, double impulse_fraction, const SyntheticConfig& cfg, Index n) {
  Vector<double> out = Vector<double>::Zero(n);
  if (cls.location == FaultLocation::none) return out;
  const double fs = cfg.sample_rate_hz;
  const double rate = defect_rate_multiplier(cls.location) * synthetic_shaft_hz(fs);
  const double spacing = 1.0 / rate;
  const double amplitude = cfg.impulse_gain_per_inch * cls.severity_inch;
  const double omega = 2.0 * std::numbers::pi * cfg.resonance_fraction * fs;
  const double tail = 10.0 * cfg.burst_decay_s;
  const double duration = static_cast<double>(n) / fs;
  for (double onset = impulse_fraction * spacing; onset < duration; onset += spacing) {
    const auto first = static_cast<Index>(std::ceil(onset * fs));
    const auto last = std::min<Index>(n, static_cast<Index>(std::ceil((onset + tail) * fs)));
    for (Index i = first; i < last; ++i) {
      const double dt = static_cast<double>(i) / fs - onset;
      out(i) += amplitude * std::exp(-dt / cfg.burst_decay_s) * std::sin(omega * dt);
    }
  }
  return out;
}

Index sample_count(const SyntheticConfig& cfg) {
  return static_cast<Index>(std::llround(cfg.sample_rate_hz * cfg.duration_s));
}

}  // namespace

Vector<double> synthetic_impulses(const FaultClass& cls, std::uint64_t seed, const SyntheticConfig& cfg) {
  cfg.validate();
  Rng rng(seed);
  const auto draws = draw_phases(rng);
  return impulse_train(cls, draws.impulse_fraction, cfg, sample_count(cfg));
}

TimeSeries gen_synthetic(const FaultClass& cls, std::uint64_t seed, const SyntheticConfig& cfg) {
  cfg.validate();
  fault_class_index(cls.name);
  const Index n = sample_count(cfg);
  const double fs = cfg.sample_rate_hz;
  const double shaft_omega = 2.0 * std::numbers::pi * synthetic_shaft_hz(fs);

  Rng rng(seed);
  const auto draws = draw_phases(rng);
  TimeSeries ts;
  ts.sample_rate_hz = fs;
  ts.label = cls.name;
  ts.samples = impulse_train(cls, draws.impulse_fraction, cfg, n);
  for (Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    ts.samples(i) += cfg.shaft_amplitude * std::sin(shaft_omega * t + draws.shaft_phase);
    if (cfg.noise_sigma > 0.0) ts.samples(i) += cfg.noise_sigma * rng.normal();
  }
  return ts;
}

std::string to_string(SplitGrouping g) {
  switch (g) {
    case SplitGrouping::automatic: return "automatic";
    case SplitGrouping::recording: return "recording";
    case SplitGrouping::block: return "block";
  }
  return "automatic";
}

SplitGrouping split_grouping_from_string(const std::string& s) {
  if (s == "automatic" || s == "auto") return SplitGrouping::automatic;
  if (s == "recording") return SplitGrouping::recording;
  if (s == "block") return SplitGrouping::block;
  throw std::invalid_argument("unknown split grouping '" + s + "'");
}

void SplitConfig::validate() const {
  if (!(train > 0 && val > 0 && test > 0)) throw std::invalid_argument("SplitConfig: fractions must be positive");
  if (std::abs(train + val + test - 1.0) > 1e-9) throw std::invalid_argument("SplitConfig: fractions must sum to 1");
}

void PipelineConfig::validate() const {
  window.validate();
  ma.validate();
  split.validate();
  if (period && *period < 2) throw std::invalid_argument("PipelineConfig: period must be >= 2");
  if (sequence_length < 1) throw std::invalid_argument("PipelineConfig: sequence_length must be >= 1");
  if (sequence_stride < 1) throw std::invalid_argument("PipelineConfig: sequence_stride must be >= 1");
}

Index PipelineConfig::period_for(double sample_rate_hz) const {
  return period.value_or(shaft_period_samples(sample_rate_hz, kShaftRpm));
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json j = {
      {"window", {{"length", window.length}, {"stride", window.stride}}},
      {"ma",
       {{"window", ma.window},
        {"alpha_rule", ma.alpha_rule == AlphaRule::fixed ? "fixed" : "from_window"},
        {"fixed_alpha", ma.fixed_alpha},
        {"hull_mode", to_string(ma.hull_mode)}}},
      {"sequence_length", sequence_length},
      {"sequence_stride", sequence_stride},
      {"split", {{"train", split.train}, {"val", split.val}, {"test", split.test}, {"grouping", to_string(split.grouping)}}},
  };
  j["period"] = period ? nlohmann::json(*period) : nlohmann::json(nullptr);
  return j;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  if (j.contains("period") && !j.at("period").is_null()) c.period = j.at("period").get<Index>();
  if (j.contains("window")) {
    c.window.length = j["window"].value("length", c.window.length);
    c.window.stride = j["window"].value("stride", c.window.stride);
  }
  if (j.contains("ma")) {
    const auto& m = j["ma"];
    c.ma.window = m.value("window", c.ma.window);
    const std::string rule = m.value("alpha_rule", std::string("from_window"));
    if (rule != "fixed" && rule != "from_window") throw std::invalid_argument("unknown alpha rule '" + rule + "'");
    c.ma.alpha_rule = rule == "fixed" ? AlphaRule::fixed : AlphaRule::from_window;
    c.ma.fixed_alpha = m.value("fixed_alpha", c.ma.fixed_alpha);
    c.ma.hull_mode = hull_mode_from_string(m.value("hull_mode", std::string("hull_standard")));
  }
  c.sequence_length = j.value("sequence_length", c.sequence_length);
  c.sequence_stride = j.value("sequence_stride", c.sequence_stride);
  if (j.contains("split")) {
    const auto& s = j["split"];
    c.split.train = s.value("train", c.split.train);
    c.split.val = s.value("val", c.split.val);
    c.split.test = s.value("test", c.split.test);
    c.split.grouping = split_grouping_from_string(s.value("grouping", std::string("automatic")));
  }
  c.validate();
  return c;
}

namespace {

std::string hash_matrix(const Matrix<double>& m) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(static_cast<std::size_t>(m.size()) * 8);
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
      bytes.insert(bytes.end(), p, p + 8);
    }
  return sha256_hex(bytes);
}

std::string hash_samples(const Vector<double>& v) {
  return sha256_hex(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(v.data()),
                                                  static_cast<std::size_t>(v.size()) * sizeof(double)));
}

enum SplitId { kTrain = 0, kVal = 1, kTest = 2 };
constexpr const char* kSplitNames[] = {"train", "val", "test"};

struct Block {
  std::size_t recording;
  Index begin;
  Index end;
};

}  // namespace

RecordingTokens tokenize_recording(const Recording& rec, const PipelineConfig& cfg) {
  cfg.validate();
  rec.series.validate();
  const auto d = decompose_additive(rec.series, cfg.period_for(rec.series.sample_rate_hz));
  RecordingTokens out;
  out.name = rec.name;
  out.class_index = rec.class_index;
  out.tokens = featurize(d, cfg.window, cfg.ma).tokens;
  out.source_sha256 = hash_samples(rec.series.samples);
  return out;
}

Dataset build_splits(const std::vector<RecordingTokens>& recordings, const PipelineConfig& cfg, std::uint64_t seed,
                     int n_classes) {
  cfg.validate();
  const auto names = fault_class_names();
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < recordings.size(); ++i) {
    const int c = recordings[i].class_index;
    if (c < 0 || c >= n_classes)
      throw std::invalid_argument("build_splits: recording '" + recordings[i].name + "' has class index " +
                                  std::to_string(c) + " outside [0, " + std::to_string(n_classes) + ")");
    if (recordings[i].tokens.cols() != kFeatureCount)
      throw std::invalid_argument("build_splits: recording '" + recordings[i].name + "' has the wrong feature width");
    by_class[static_cast<std::size_t>(c)].push_back(i);
  }
  auto class_name = [&names](std::size_t c) {
    return c < names.size() ? names[c] : "class_" + std::to_string(c);
  };
  std::size_t min_recordings = SIZE_MAX;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty())
      throw std::invalid_argument("build_splits: class " + class_name(c) + " has zero recordings");
    min_recordings = std::min(min_recordings, by_class[c].size());
  }
  SplitGrouping grouping = cfg.split.grouping;
  if (grouping == SplitGrouping::automatic)
    grouping = min_recordings >= 3 ? SplitGrouping::recording : SplitGrouping::block;

  std::vector<Block> blocks[3];
  nlohmann::json rec_json = nlohmann::json::array();
  std::vector<nlohmann::json> rec_entries(recordings.size());
  for (std::size_t i = 0; i < recordings.size(); ++i) {
    rec_entries[i] = {{"name", recordings[i].name},
                      {"class", class_name(static_cast<std::size_t>(recordings[i].class_index))},
                      {"windows", recordings[i].tokens.rows()},
                      {"tokens_sha256", hash_matrix(recordings[i].tokens)}};
    if (!recordings[i].source_sha256.empty()) rec_entries[i]["source_sha256"] = recordings[i].source_sha256;
  }

  if (grouping == SplitGrouping::recording) {
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      auto members = by_class[c];
      Rng rng(derive_seed(seed, 0x5117 + c));
      rng.shuffle(members);
      const auto n = static_cast<double>(members.size());
      const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.split.test * n)));
      const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.split.val * n)));
      if (n_test + n_val >= members.size())
        throw std::invalid_argument("build_splits: class " + class_name(c) +
                                    " has too few recordings for recording-level grouping");
      const std::size_t n_train = members.size() - n_test - n_val;
      for (std::size_t k = 0; k < members.size(); ++k) {
        const int split = k < n_train ? kTrain : (k < n_train + n_val ? kVal : kTest);
        const auto r = members[k];
        blocks[split].push_back({r, 0, recordings[r].tokens.rows()});
        rec_entries[r]["split"] = kSplitNames[split];
      }
    }
  } else {
    for (std::size_t r = 0; r < recordings.size(); ++r) {
      const Index n = recordings[r].tokens.rows();
      const auto n_train = static_cast<Index>(std::llround(cfg.split.train * static_cast<double>(n)));
      const auto n_val = static_cast<Index>(std::llround(cfg.split.val * static_cast<double>(n)));
      blocks[kTrain].push_back({r, 0, n_train});
      blocks[kVal].push_back({r, n_train, n_train + n_val});
      blocks[kTest].push_back({r, n_train + n_val, n});
      rec_entries[r]["blocks"] = {{"train", {0, n_train}}, {"val", {n_train, n_train + n_val}}, {"test", {n_train + n_val, n}}};
    }
  }
  for (auto& e : rec_entries) rec_json.push_back(std::move(e));

  std::vector<Matrix<double>> train_rows;
  for (const auto& b : blocks[kTrain])
    if (b.end > b.begin) train_rows.push_back(recordings[b.recording].tokens.middleRows(b.begin, b.end - b.begin));

  Dataset ds;
  ds.standardizer = Standardizer::fit(train_rows);
  std::vector<Sample>* outputs[3] = {&ds.train, &ds.val, &ds.test};
  nlohmann::json window_counts, sample_counts;
  std::vector<std::string> warnings;
  for (int s = 0; s < 3; ++s) {
    std::vector<std::int64_t> windows(static_cast<std::size_t>(n_classes), 0);
    std::vector<std::int64_t> samples(static_cast<std::size_t>(n_classes), 0);
    for (const auto& b : blocks[s]) {
      const auto& rec = recordings[b.recording];
      windows[static_cast<std::size_t>(rec.class_index)] += b.end - b.begin;
      for (Index start = b.begin; start + cfg.sequence_length <= b.end; start += cfg.sequence_stride) {
        Sample smp;
        smp.tokens = ds.standardizer.apply(rec.tokens.middleRows(start, cfg.sequence_length));
        smp.label = rec.class_index;
        smp.recording = rec.name;
        smp.first_window = start;
        outputs[s]->push_back(std::move(smp));
        ++samples[static_cast<std::size_t>(rec.class_index)];
      }
    }
    nlohmann::json wc, sc;
    for (std::size_t c = 0; c < windows.size(); ++c) {
      wc[class_name(c)] = windows[c];
      sc[class_name(c)] = samples[c];
      if (samples[c] == 0) {
        if (s == kTrain)
          throw std::invalid_argument("build_splits: class " + class_name(c) + " has no training samples");
        warnings.push_back("class " + class_name(c) + " has no " + kSplitNames[s] + " samples");
      }
    }
    window_counts[kSplitNames[s]] = wc;
    sample_counts[kSplitNames[s]] = sc;
  }

  nlohmann::json constant = nlohmann::json::array();
  for (bool b : ds.standardizer.constant) constant.push_back(b);
  ds.manifest = {
      {"seed", seed},
      {"grouping", to_string(grouping)},
      {"pipeline", cfg.to_json()},
      {"recordings", rec_json},
      {"window_counts", window_counts},
      {"sample_counts", sample_counts},
      {"standardization",
       {{"mean", std::vector<double>(ds.standardizer.mean.data(), ds.standardizer.mean.data() + ds.standardizer.mean.size())},
        {"scale",
         std::vector<double>(ds.standardizer.scale.data(), ds.standardizer.scale.data() + ds.standardizer.scale.size())},
        {"constant", constant}}},
      {"warnings", warnings},
  };
  return ds;
}

Dataset build_dataset(const std::vector<Recording>& sources, const PipelineConfig& cfg, std::uint64_t seed,
                      int n_classes, unsigned threads) {
  cfg.validate();
  std::vector<RecordingTokens> tokens(sources.size());
  std::vector<std::exception_ptr> failures(sources.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(sources.size())));
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < sources.size(); i += workers) {
      try {
        tokens[i] = tokenize_recording(sources[i], cfg);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return build_splits(tokens, cfg, seed, n_classes);
}

}  // namespace tdafault
