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

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include "tdafault/data.hpp"
#include "tdafault/decompose.hpp"
#include "tdafault/features.hpp"
#include "tdafault/io.hpp"
#include "tdafault/matfile.hpp"
#include "tdafault/metrics.hpp"
#include "tdafault/train.hpp"

namespace tdafault::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

// Bad flag values or missing inputs; maps to the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const json& stage_versions() {
  static const json v = {{"synth", 1},     {"ingest", 1}, {"decompose", 1}, {"featurize", 1},
                         {"train", 1},     {"eval", 1},   {"report", 1}};
  return v;
}

std::string utc_timestamp() {
  long long epoch = 0;
  if (const char* s = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(s, &end, 10);
    if (end != s && *end == '\0' && v >= 0) epoch = v;
  }
  const std::time_t t = static_cast<std::time_t>(epoch);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

unsigned worker_threads() {
  if (const char* s = std::getenv("TDA_FAULT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (end != s && *end == '\0' && v >= 1) return static_cast<unsigned>(std::min<long>(v, 256));
  }
  return 1;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first failure by
// index is rethrown, so errors are reported deterministically.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> failures(n);
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < n; i += workers) {
      try {
        fn(i);
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
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// File name without directory and without the first matching suffix.
std::string stem_of(const fs::path& p, std::initializer_list<const char*> suffixes) {
  std::string name = p.filename().string();
  for (const char* s : suffixes)
    if (ends_with(name, s)) return name.substr(0, name.size() - std::string(s).size());
  return p.stem().string();
}

// Expands directories to their files ending in `suffix`, sorted by name.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs, const std::string& suffix) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && ends_with(e.path().filename().string(), suffix)) found.push_back(e.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p)) {
      out.push_back(p);
    } else {
      throw UsageError("input '" + in + "' does not exist");
    }
  }
  if (out.empty()) throw UsageError("no input files matching *" + suffix);
  return out;
}

struct Globals {
  std::uint64_t seed = 0;
  std::string config_path;
  std::string out = ".";
  CLI::Option* seed_opt = nullptr;
};

class Run {
 public:
  Run(std::string command, const Globals& g) : command_(std::move(command)), out_(g.out) {
    if (!g.config_path.empty()) {
      config_ = read_json(g.config_path);
      if (!config_.is_object()) throw FormatError("config: top level must be an object");
      add_input(g.config_path);
    }
    seed_ = g.seed;
    if ((g.seed_opt == nullptr || g.seed_opt->count() == 0) && config_.contains("seed"))
      seed_ = config_.at("seed").get<std::uint64_t>();
    fs::create_directories(out_);
  }

  std::uint64_t seed() const { return seed_; }
  const fs::path& out() const { return out_; }

  json section(const char* name) const {
    return config_.contains(name) ? config_.at(name) : json::object();
  }

  // Paths inside the output directory are recorded relative to it so runs in
  // different directories produce the same manifest.
  std::string display(const fs::path& p) const {
    const auto abs = fs::weakly_canonical(fs::absolute(p));
    const auto base = fs::weakly_canonical(fs::absolute(out_));
    const auto rel = abs.lexically_relative(base);
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return p.generic_string();
  }

  void add_input(const fs::path& p) { inputs_.push_back({{"path", display(p)}, {"sha256", sha256_file(p)}}); }

  void write_output_text(const fs::path& rel, const std::string& text) {
    write_text(out_ / rel, text);
    record_output(rel, sha256_hex(text));
  }

  void write_output_json(const fs::path& rel, const json& doc) {
    const std::string text = doc.dump(2) + "\n";
    write_text(out_ / rel, text);
    record_output(rel, sha256_hex(text));
  }

  void record_output(const fs::path& rel, const std::string& sha) {
    outputs_.push_back({{"path", rel.generic_string()}, {"sha256", sha}});
  }

  void note(std::string warning) { warnings_.push_back(std::move(warning)); }

  void finish(const json& effective_config) {
    json m = {{"format_version", 1},
              {"tool", "tdafault"},
              {"tool_version", kToolVersion},
              {"command", command_},
              {"stage_versions", stage_versions()},
              {"seed", seed_},
              {"config", effective_config},
              {"inputs", inputs_},
              {"outputs", outputs_},
              {"warnings", warnings_},
              {"created_utc", utc_timestamp()}};
    write_json(out_ / (command_ + ".manifest.json"), m);
  }

 private:
  std::string command_;
  fs::path out_;
  json config_ = json::object();
  std::uint64_t seed_ = 0;
  json inputs_ = json::array();
  json outputs_ = json::array();
  std::vector<std::string> warnings_;
};

// Calls fn and reports validation failures as usage errors.
template <typename F>
void validate_flags(F&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

template <typename T>
void override_from(CLI::Option* opt, T& dst, const T& value) {
  if (opt != nullptr && opt->count() > 0) dst = value;
}

std::map<std::string, std::string> read_labels(const fs::path& path) {
  const json j = read_json(path);
  if (!j.is_object()) throw FormatError("labels: expected an object mapping file names to class names");
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw FormatError("labels: value for '" + k + "' is not a string");
    const std::string cls = v.get<std::string>();
    fault_class_index(cls);  // throws on unknown names
    out[stem_of(k, {".csv", ".mat"})] = cls;
  }
  return out;
}

TimeSeries load_series(const fs::path& path, std::optional<double> fallback_fs) {
  const auto csv = parse_series_csv(read_text(path));
  TimeSeries ts;
  ts.samples = csv.samples;
  if (csv.sample_rate_hz) {
    ts.sample_rate_hz = *csv.sample_rate_hz;
  } else if (fallback_fs) {
    ts.sample_rate_hz = *fallback_fs;
  } else {
    throw FormatError("series '" + path.string() + "' has no sample_rate_hz line; pass --fs");
  }
  if (ts.samples.size() == 0) throw FormatError("series '" + path.string() + "' is empty");
  ts.validate();
  return ts;
}

// ---------------------------------------------------------------- synth

struct SynthFlags {
  int recordings = 4;
  double duration = 8.0;
  double fs = 4096.0;
  double noise = 0.1;
  std::vector<std::string> classes;
  CLI::Option *recordings_opt, *duration_opt, *fs_opt, *noise_opt, *classes_opt;
};

int run_synth(const Globals& g, const SynthFlags& f, std::ostream& out) {
  Run run("synth", g);
  const json sec = run.section("synth");
  SyntheticConfig sc = sec.contains("synthetic") ? SyntheticConfig::from_json(sec.at("synthetic")) : SyntheticConfig{};
  int per_class = sec.value("recordings_per_class", 4);
  std::vector<std::string> classes = sec.value("classes", fault_class_names());
  override_from(f.recordings_opt, per_class, f.recordings);
  override_from(f.duration_opt, sc.duration_s, f.duration);
  override_from(f.fs_opt, sc.sample_rate_hz, f.fs);
  override_from(f.noise_opt, sc.noise_sigma, f.noise);
  override_from(f.classes_opt, classes, f.classes);
  validate_flags([&] {
    sc.validate();
    if (per_class < 1) throw std::invalid_argument("--recordings must be positive");
    for (const auto& c : classes) fault_class_index(c);
  });

  struct Job {
    std::string cls;
    int k;
    std::string file;
  };
  std::vector<Job> jobs;
  for (const auto& c : classes)
    for (int k = 0; k < per_class; ++k) jobs.push_back({c, k, c + "-" + std::to_string(k) + ".csv"});
  std::vector<std::string> texts(jobs.size());
  parallel_for(jobs.size(), worker_threads(), [&](std::size_t i) {
    const auto& j = jobs[i];
    const auto seed = derive_seed(run.seed(), static_cast<std::uint64_t>(fault_class_index(j.cls)) * 1000 + j.k);
    const auto ts = gen_synthetic(fault_class(j.cls), seed, sc);
    texts[i] = series_csv(ts.samples, ts.sample_rate_hz);
  });
  json labels = json::object();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    run.write_output_text(fs::path("recordings") / jobs[i].file, texts[i]);
    labels[jobs[i].file] = jobs[i].cls;
  }
  run.write_output_json("labels.json", labels);
  run.finish({{"recordings_per_class", per_class}, {"classes", classes}, {"synthetic", sc.to_json()}});
  out << "synth: wrote " << jobs.size() << " recordings to " << (run.out() / "recordings").generic_string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- ingest

struct IngestFlags {
  std::vector<std::string> inputs;
  std::string labels;
  std::string channel = "DE_time";
  double fs = 48000.0;
  CLI::Option* fs_opt;
};

int run_ingest(const Globals& g, const IngestFlags& f, std::ostream& out) {
  Run run("ingest", g);
  const json sec = run.section("ingest");
  std::string channel = sec.value("channel", f.channel);
  if (!f.channel.empty() && f.channel != "DE_time") channel = f.channel;
  std::optional<double> fs_flag;
  if (f.fs_opt->count() > 0) fs_flag = f.fs;
  else if (sec.contains("sample_rate_hz")) fs_flag = sec.at("sample_rate_hz").get<double>();
  if (fs_flag && !(*fs_flag > 0)) throw UsageError("--fs must be positive");

  std::vector<fs::path> files;
  for (const auto& in : f.inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && (ends_with(name, ".mat") || ends_with(name, ".csv"))) files.push_back(e.path());
      }
    } else if (fs::is_regular_file(p)) {
      files.push_back(p);
    } else {
      throw UsageError("input '" + in + "' does not exist");
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("ingest: no .mat or .csv inputs");

  std::map<std::string, std::string> in_labels;
  if (!f.labels.empty()) {
    in_labels = read_labels(f.labels);
    run.add_input(f.labels);
  }
  json labels = json::object();
  for (const auto& p : files) {
    run.add_input(p);
    const std::string stem = stem_of(p, {".mat", ".csv"});
    TimeSeries ts;
    if (ends_with(p.filename().string(), ".mat")) {
      const auto bytes = read_bytes(p);
      const auto mat = parse_mat(bytes);
      for (const auto& w : mat.warnings) run.note(p.filename().string() + ": " + w);
      for (const auto& e : mat.errors)
        run.note(p.filename().string() + ": array '" + e.name + "' at byte offset " + std::to_string(e.offset) +
                 ": " + e.message);
      const MatArray* pick = nullptr;
      for (const auto& a : mat.arrays)
        if (a.name.find(channel) != std::string::npos) {
          pick = &a;
          break;
        }
      if (pick == nullptr) throw FormatError(p.string() + ": no numeric array whose name contains '" + channel + "'");
      ts.samples = Eigen::Map<const Vector<double>>(pick->values.data(), static_cast<Index>(pick->values.size()));
      ts.sample_rate_hz = fs_flag.value_or(48000.0);
      if (!fs_flag) run.note(p.filename().string() + ": sample rate not stored in MAT-file, assumed 48000 Hz");
    } else {
      ts = load_series(p, fs_flag);
    }
    ts.validate();
    const std::string file = stem + ".csv";
    run.write_output_text(fs::path("recordings") / file, series_csv(ts.samples, ts.sample_rate_hz));
    if (auto it = in_labels.find(stem); it != in_labels.end()) labels[file] = it->second;
  }
  if (!in_labels.empty()) run.write_output_json("labels.json", labels);
  json cfg = {{"channel", channel}};
  if (fs_flag) cfg["sample_rate_hz"] = *fs_flag;
  run.finish(cfg);
  out << "ingest: wrote " << files.size() << " recordings to " << (run.out() / "recordings").generic_string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- decompose

struct DecomposeFlags {
  std::vector<std::string> inputs;
  Index period = 0;
  double hint_hz = 0;
  double fs = 0;
  CLI::Option *period_opt, *hint_opt, *fs_opt;
};

int run_decompose(const Globals& g, const DecomposeFlags& f, std::ostream& out) {
  Run run("decompose", g);
  const json sec = run.section("pipeline");
  std::optional<Index> period;
  if (sec.contains("period") && !sec.at("period").is_null()) period = sec.at("period").get<Index>();
  if (f.period_opt->count() > 0) period = f.period;
  std::optional<double> hint;
  if (f.hint_opt->count() > 0) hint = f.hint_hz;
  std::optional<double> fallback_fs;
  if (f.fs_opt->count() > 0) fallback_fs = f.fs;
  if (period && *period < 2) throw UsageError("--period must be >= 2");

  const auto files = expand_inputs(f.inputs, ".csv");
  for (const auto& p : files) run.add_input(p);
  std::vector<std::string> csvs(files.size());
  std::vector<json> sidecars(files.size());
  parallel_for(files.size(), worker_threads(), [&](std::size_t i) {
    const auto ts = load_series(files[i], fallback_fs);
    Index p = 0;
    if (period) p = *period;
    else if (hint) p = estimate_period(ts, hint);
    else p = shaft_period_samples(ts.sample_rate_hz);
    const auto d = decompose_additive(ts, p);
    Matrix<double> m(ts.size(), 4);
    m.col(0) = ts.samples;
    m.col(1) = d.trend;
    m.col(2) = d.seasonal;
    m.col(3) = d.residual;
    csvs[i] = matrix_csv(m, {"input", "trend", "seasonal", "residual"});
    sidecars[i] = {{"source", run.display(files[i])},
                   {"source_sha256", sha256_file(files[i])},
                   {"sample_rate_hz", ts.sample_rate_hz},
                   {"period", p},
                   {"valid_begin", d.valid_begin},
                   {"valid_end", d.valid_end}};
  });
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string stem = stem_of(files[i], {".csv"});
    run.write_output_text(fs::path("decomposed") / (stem + ".decomp.csv"), csvs[i]);
    run.write_output_json(fs::path("decomposed") / (stem + ".decomp.json"), sidecars[i]);
  }
  json cfg = json::object();
  cfg["period"] = period ? json(*period) : json(nullptr);
  cfg["period_hint_hz"] = hint ? json(*hint) : json(nullptr);
  run.finish(cfg);
  out << "decompose: wrote " << files.size() << " decompositions to "
      << (run.out() / "decomposed").generic_string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- featurize

struct FeaturizeFlags {
  std::vector<std::string> inputs;
  Index window = 256, stride = 128, ma_window = 16;
  std::string hull_mode;
  double alpha = 0;
  CLI::Option *window_opt, *stride_opt, *ma_opt, *hull_opt, *alpha_opt;
};

json ma_json(const MaConfig& ma) {
  return {{"window", ma.window},
          {"alpha_rule", ma.alpha_rule == AlphaRule::fixed ? "fixed" : "from_window"},
          {"fixed_alpha", ma.fixed_alpha},
          {"hull_mode", to_string(ma.hull_mode)}};
}

json channel_map_json(const ChannelMap& m) {
  return {{"residual", {m.residual.begin, m.residual.end()}},
          {"trend", {m.trend.begin, m.trend.end()}},
          {"seasonal", {m.seasonal.begin, m.seasonal.end()}}};
}

int run_featurize(const Globals& g, const FeaturizeFlags& f, std::ostream& out) {
  Run run("featurize", g);
  PipelineConfig pc = PipelineConfig::from_json(run.section("pipeline"));
  override_from(f.window_opt, pc.window.length, f.window);
  override_from(f.stride_opt, pc.window.stride, f.stride);
  override_from(f.ma_opt, pc.ma.window, f.ma_window);
  if (f.hull_opt->count() > 0) validate_flags([&] { pc.ma.hull_mode = hull_mode_from_string(f.hull_mode); });
  if (f.alpha_opt->count() > 0) {
    pc.ma.alpha_rule = AlphaRule::fixed;
    pc.ma.fixed_alpha = f.alpha;
  }
  validate_flags([&] {
    pc.window.validate();
    pc.ma.validate();
    if (pc.ma.window < 2) throw std::invalid_argument("--ma-window must be >= 2");
  });

  const auto files = expand_inputs(f.inputs, ".decomp.csv");
  for (const auto& p : files) run.add_input(p);
  std::vector<std::string> csvs(files.size());
  std::vector<json> sidecars(files.size());
  std::vector<std::string> columns(feature_names().begin(), feature_names().end());
  parallel_for(files.size(), worker_threads(), [&](std::size_t i) {
    std::vector<std::string> cols;
    const Matrix<double> m = parse_matrix_csv(read_text(files[i]), &cols);
    const std::vector<std::string> want = {"input", "trend", "seasonal", "residual"};
    if (cols != want) throw FormatError(files[i].string() + ": expected columns input,trend,seasonal,residual");
    Decomposition<double> d;
    d.trend = m.col(1);
    d.seasonal = m.col(2);
    d.residual = m.col(3);
    d.valid_end = m.rows();
    const auto seq = featurize(d, pc.window, pc.ma);
    csvs[i] = matrix_csv(seq.tokens, columns);
    sidecars[i] = {{"source", run.display(files[i])},
                   {"source_sha256", sha256_file(files[i])},
                   {"windows", seq.length()},
                   {"features", columns},
                   {"channel_map", channel_map_json(seq.channel_map)},
                   {"window", {{"length", pc.window.length}, {"stride", pc.window.stride}}},
                   {"ma", ma_json(pc.ma)},
                   {"standardization", nullptr}};
  });
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string stem = stem_of(files[i], {".decomp.csv"});
    run.write_output_text(fs::path("tokens") / (stem + ".tokens.csv"), csvs[i]);
    run.write_output_json(fs::path("tokens") / (stem + ".tokens.json"), sidecars[i]);
  }
  run.finish({{"window", {{"length", pc.window.length}, {"stride", pc.window.stride}}}, {"ma", ma_json(pc.ma)}});
  out << "featurize: wrote " << files.size() << " token sequences to " << (run.out() / "tokens").generic_string()
      << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train / eval shared

struct TokenSet {
  std::vector<RecordingTokens> recordings;
  std::optional<json> sidecar;  // of the first file, for window/ma provenance
};

TokenSet load_tokens(Run& run, const std::vector<std::string>& inputs, const std::string& labels_path) {
  if (labels_path.empty()) throw UsageError("--labels is required");
  const auto labels = read_labels(labels_path);
  run.add_input(labels_path);
  TokenSet set;
  for (const auto& p : expand_inputs(inputs, ".tokens.csv")) {
    run.add_input(p);
    const std::string stem = stem_of(p, {".tokens.csv"});
    const auto it = labels.find(stem);
    if (it == labels.end()) throw FormatError("no label for token file '" + p.filename().string() + "'");
    std::vector<std::string> cols;
    RecordingTokens rt;
    const std::string text = read_text(p);
    rt.tokens = parse_matrix_csv(text, &cols);
    if (rt.tokens.cols() != kFeatureCount)
      throw FormatError(p.string() + ": expected " + std::to_string(kFeatureCount) + " feature columns");
    rt.name = stem;
    rt.class_index = fault_class_index(it->second);
    rt.source_sha256 = sha256_hex(text);
    set.recordings.push_back(std::move(rt));
    if (!set.sidecar) {
      fs::path side = p;
      side.replace_filename(stem + ".tokens.json");
      if (fs::exists(side)) set.sidecar = read_json(side);
    }
  }
  return set;
}

json standardizer_json(const Standardizer& s) {
  json constant = json::array();
  for (bool b : s.constant) constant.push_back(b);
  return {{"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
          {"scale", std::vector<double>(s.scale.data(), s.scale.data() + s.scale.size())},
          {"constant", constant}};
}

// ---------------------------------------------------------------- train

struct TrainFlags {
  std::vector<std::string> tokens;
  std::string labels;
  int epochs = 100, batch_size = 32, patience = 10;
  double lr = 1e-3, dropout = 0.1;
  std::string attention;
  Index seq_len = 16, seq_stride = 16, d_model = 32, layers = 2, heads = 2;
  std::string grouping;
  CLI::Option *epochs_opt, *batch_opt, *patience_opt, *lr_opt, *dropout_opt, *attention_opt, *seq_len_opt,
      *seq_stride_opt, *d_model_opt, *layers_opt, *heads_opt, *grouping_opt;
};

int run_train(const Globals& g, const TrainFlags& f, std::ostream& out) {
  Run run("train", g);
  auto set = load_tokens(run, f.tokens, f.labels);

  PipelineConfig pc = PipelineConfig::from_json(run.section("pipeline"));
  if (set.sidecar) {
    const auto& side = *set.sidecar;
    pc.window.length = side.at("window").at("length").get<Index>();
    pc.window.stride = side.at("window").at("stride").get<Index>();
    const auto& ma = side.at("ma");
    pc.ma.window = ma.at("window").get<Index>();
    pc.ma.alpha_rule = ma.at("alpha_rule").get<std::string>() == "fixed" ? AlphaRule::fixed : AlphaRule::from_window;
    pc.ma.fixed_alpha = ma.at("fixed_alpha").get<double>();
    pc.ma.hull_mode = hull_mode_from_string(ma.at("hull_mode").get<std::string>());
  }
  override_from(f.seq_len_opt, pc.sequence_length, f.seq_len);
  override_from(f.seq_stride_opt, pc.sequence_stride, f.seq_stride);
  if (f.grouping_opt->count() > 0)
    validate_flags([&] { pc.split.grouping = split_grouping_from_string(f.grouping); });

  ModelConfig mc = ModelConfig::from_json(run.section("model"));
  mc.seed = run.seed();
  override_from(f.d_model_opt, mc.d_model, f.d_model);
  override_from(f.layers_opt, mc.layers, f.layers);
  override_from(f.heads_opt, mc.heads, f.heads);
  override_from(f.dropout_opt, mc.dropout_rate, f.dropout);
  if (f.attention_opt->count() > 0) validate_flags([&] { mc.attention = attention_kind_from_string(f.attention); });
  mc.n_classes = static_cast<Index>(fault_classes().size());

  TrainConfig tc = TrainConfig::from_json(run.section("train"));
  tc.seed = run.seed();
  override_from(f.epochs_opt, tc.epochs, f.epochs);
  override_from(f.batch_opt, tc.batch_size, f.batch_size);
  override_from(f.patience_opt, tc.early_stop_patience, f.patience);
  override_from(f.lr_opt, tc.learning_rate, f.lr);
  validate_flags([&] {
    pc.validate();
    mc.validate();
    tc.validate();
    if (pc.sequence_length > mc.t_max)
      throw std::invalid_argument("sequence length exceeds the model's t_max");
  });

  const Dataset ds = build_splits(set.recordings, pc, run.seed(), static_cast<int>(mc.n_classes));
  const auto result = train(Model(mc), ds.train, ds.val, tc);

  const std::string splits_text = ds.manifest.dump(2) + "\n";
  json ckpt = result.model.to_json();
  ckpt["class_names"] = fault_class_names();
  ckpt["standardizer"] = standardizer_json(ds.standardizer);
  ckpt["pipeline"] = pc.to_json();
  ckpt["train"] = tc.to_json();
  ckpt["data"] = {{"split_seed", run.seed()}, {"splits_sha256", sha256_hex(splits_text)}};
  ckpt["best_epoch"] = result.best_epoch;

  run.write_output_text("splits.json", splits_text);
  run.write_output_text("history.csv", history_csv(result.history));
  run.write_output_json("checkpoint.json", ckpt);
  for (const auto& w : ds.manifest.at("warnings")) run.note(w.get<std::string>());
  run.finish({{"pipeline", pc.to_json()}, {"model", mc.to_json()}, {"train", tc.to_json()}});

  const auto& best = result.history[static_cast<std::size_t>(result.best_epoch - 1)];
  out << "train: " << ds.train.size() << " train / " << ds.val.size() << " val / " << ds.test.size()
      << " test samples; best epoch " << result.best_epoch << " (val loss " << format_double(best.val_loss)
      << ", val accuracy " << format_double(best.val_accuracy) << ")" << (result.early_stopped ? ", early stop" : "")
      << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalFlags {
  std::string checkpoint;
  std::vector<std::string> tokens;
  std::string labels;
  std::string split = "test";
  std::string predictions;
};

void write_report(Run& run, const EvalReport& rep, const json& extra) {
  json doc = rep.to_json();
  for (const auto& [k, v] : extra.items()) doc[k] = v;
  run.write_output_json("report.json", doc);
  run.write_output_text("confusion.csv", confusion_csv(rep.confusion));
}

int eval_predictions(Run& run, const EvalFlags& f, std::ostream& out) {
  run.add_input(f.predictions);
  std::vector<std::string> cols;
  const std::string text = read_text(f.predictions);
  // Accepts class names or class indices in the two columns.
  std::vector<int> actual, predicted;
  bool header = true;
  std::size_t line_no = 0;
  std::istringstream is(text);
  std::string line;
  auto parse_label = [&](std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r"));
    s.erase(s.find_last_not_of(" \t\r") + 1);
    if (!s.empty() && std::all_of(s.begin(), s.end(), ::isdigit)) {
      const int v = std::stoi(s);
      if (v >= static_cast<int>(fault_classes().size()))
        throw FormatError("predictions: class index out of range on line " + std::to_string(line_no));
      return v;
    }
    try {
      return fault_class_index(s);
    } catch (const std::invalid_argument&) {
      throw FormatError("predictions: unknown class '" + s + "' on line " + std::to_string(line_no));
    }
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("actual", 0) == 0) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("predictions: expected two columns on line " + std::to_string(line_no));
    actual.push_back(parse_label(line.substr(0, comma)));
    predicted.push_back(parse_label(line.substr(comma + 1)));
  }
  if (actual.empty()) throw FormatError("predictions: no rows");
  const auto rep = make_report(ConfusionMatrix::from_pairs(actual, predicted, fault_class_names()));
  write_report(run, rep, {{"source", "predictions"}});
  run.finish({{"mode", "predictions"}});
  out << "eval: accuracy " << format_double(rep.accuracy) << " macro-F1 " << format_double(rep.macro_f1) << " on "
      << actual.size() << " samples\n";
  return kExitOk;
}

int run_eval(const Globals& g, const EvalFlags& f, std::ostream& out) {
  Run run("eval", g);
  if (!f.predictions.empty()) {
    if (!f.checkpoint.empty()) throw UsageError("--predictions and --checkpoint are mutually exclusive");
    return eval_predictions(run, f, out);
  }
  if (f.checkpoint.empty()) throw UsageError("eval needs --checkpoint (or --predictions)");
  if (f.split != "train" && f.split != "val" && f.split != "test") throw UsageError("--split must be train, val or test");
  run.add_input(f.checkpoint);
  const json ckpt = read_json(f.checkpoint);
  const Model model = Model::from_json(ckpt);
  const PipelineConfig pc = PipelineConfig::from_json(ckpt.at("pipeline"));
  const auto split_seed = ckpt.at("data").at("split_seed").get<std::uint64_t>();

  auto set = load_tokens(run, f.tokens, f.labels);
  const Dataset ds = build_splits(set.recordings, pc, split_seed, static_cast<int>(model.config().n_classes));
  if (sha256_hex(ds.manifest.dump(2) + "\n") != ckpt.at("data").at("splits_sha256").get<std::string>())
    throw FormatError("eval: token files do not reproduce the training splits of this checkpoint");
  const auto& split = f.split == "test" ? ds.test : (f.split == "val" ? ds.val : ds.train);
  const auto ev = evaluate(model, split);
  write_report(run, ev.report, {{"source", "checkpoint"}, {"split", f.split}});
  run.finish({{"mode", "checkpoint"}, {"split", f.split}});
  out << "eval: " << f.split << " accuracy " << format_double(ev.report.accuracy) << " macro-F1 "
      << format_double(ev.report.macro_f1) << " on " << split.size() << " samples\n";
  return kExitOk;
}

// ---------------------------------------------------------------- report

int run_report(const Globals& g, const std::string& report_path, std::ostream& out) {
  Run run("report", g);
  const fs::path path = report_path.empty() ? run.out() / "report.json" : fs::path(report_path);
  run.add_input(path);
  const auto rep = EvalReport::from_json(read_json(path));
  const std::string table = render_table(rep);
  run.write_output_text("report_metrics.csv", metrics_csv(rep));
  run.finish(json::object());
  out << table;
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bearing fault detection with temporal decomposition attention", "tdafault"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  Globals g;
  g.seed_opt = app.add_option("--seed", g.seed, "Seed for every random choice (default 0)");
  app.add_option("--config", g.config_path, "JSON config with per-stage sections; flags override it")
      ->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory (default .)");

  auto* synth = app.add_subcommand("synth", "Generate labeled synthetic recordings");
  SynthFlags sf;
  sf.recordings_opt = synth->add_option("--recordings", sf.recordings, "Recordings per class (default 4)");
  sf.duration_opt = synth->add_option("--duration", sf.duration, "Seconds per recording (default 8)");
  sf.fs_opt = synth->add_option("--fs", sf.fs, "Sample rate in Hz (default 4096)");
  sf.noise_opt = synth->add_option("--noise", sf.noise, "Gaussian noise sigma (default 0.1)");
  sf.classes_opt = synth->add_option("--classes", sf.classes, "Subset of class names");

  auto* ingest = app.add_subcommand("ingest", "Convert .mat/.csv recordings to canonical CSV");
  IngestFlags inf;
  ingest->add_option("inputs", inf.inputs, "Files or directories")->required();
  ingest->add_option("--labels", inf.labels, "JSON mapping input file names to class names");
  ingest->add_option("--channel", inf.channel, "MAT array name fragment to select (default DE_time)");
  inf.fs_opt = ingest->add_option("--fs", inf.fs, "Sample rate when the input does not state one");

  auto* decomp = app.add_subcommand("decompose", "Split recordings into trend, seasonal and residual");
  DecomposeFlags df;
  decomp->add_option("inputs", df.inputs, "Series CSV files or directories")->required();
  df.period_opt = decomp->add_option("--period", df.period, "Period in samples (default: shaft period)");
  df.hint_opt = decomp->add_option("--period-hint-hz", df.hint_hz, "Periodic frequency to derive the period from");
  df.fs_opt = decomp->add_option("--fs", df.fs, "Sample rate for CSVs without a sample_rate_hz line");

  auto* feat = app.add_subcommand("featurize", "Compute per-window feature tokens");
  FeaturizeFlags ff;
  feat->add_option("inputs", ff.inputs, "Decomposition CSV files or directories")->required();
  ff.window_opt = feat->add_option("--window", ff.window, "Window length in samples (default 256)");
  ff.stride_opt = feat->add_option("--stride", ff.stride, "Window stride in samples (default 128)");
  ff.ma_opt = feat->add_option("--ma-window", ff.ma_window, "Moving-average window (default 16)");
  ff.hull_opt = feat->add_option("--hull-mode", ff.hull_mode, "hull_standard or paper_literal");
  ff.alpha_opt = feat->add_option("--alpha", ff.alpha, "Use this fixed EMA alpha for every stage");

  auto* tr = app.add_subcommand("train", "Fit the classifier and write a checkpoint");
  TrainFlags tf;
  tr->add_option("--tokens", tf.tokens, "Token CSV files or directories")->required();
  tr->add_option("--labels", tf.labels, "JSON mapping recording file names to class names")->required();
  tf.epochs_opt = tr->add_option("--epochs", tf.epochs, "Maximum epochs (default 100)");
  tf.batch_opt = tr->add_option("--batch-size", tf.batch_size, "Minibatch size (default 32)");
  tf.patience_opt = tr->add_option("--patience", tf.patience, "Early-stopping patience (default 10)");
  tf.lr_opt = tr->add_option("--lr", tf.lr, "Adam learning rate (default 1e-3)");
  tf.dropout_opt = tr->add_option("--dropout", tf.dropout, "Dropout rate (default 0.1)");
  tf.attention_opt = tr->add_option("--attention", tf.attention, "tda or standard (default tda)");
  tf.seq_len_opt = tr->add_option("--seq-len", tf.seq_len, "Tokens per sample (default 16)");
  tf.seq_stride_opt = tr->add_option("--seq-stride", tf.seq_stride, "Stride between samples (default 16)");
  tf.d_model_opt = tr->add_option("--d-model", tf.d_model, "Model width (default 32)");
  tf.layers_opt = tr->add_option("--layers", tf.layers, "Encoder layers (default 2)");
  tf.heads_opt = tr->add_option("--heads", tf.heads, "Attention heads (default 2)");
  tf.grouping_opt = tr->add_option("--grouping", tf.grouping, "automatic, recording or block");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a split, or score a predictions file");
  EvalFlags ef;
  ev->add_option("--checkpoint", ef.checkpoint, "Checkpoint written by train");
  ev->add_option("--tokens", ef.tokens, "Token CSV files or directories used for training");
  ev->add_option("--labels", ef.labels, "Labels JSON used for training");
  ev->add_option("--split", ef.split, "train, val or test (default test)");
  ev->add_option("--predictions", ef.predictions, "CSV of actual,predicted class labels");

  auto* rp = app.add_subcommand("report", "Render a report as a text table and CSV");
  std::string report_path;
  rp->add_option("--report", report_path, "report.json (default <out>/report.json)");

  for (auto* sub : {synth, ingest, decomp, feat, tr, ev, rp}) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "tdafault: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return run_synth(g, sf, out);
    if (ingest->parsed()) return run_ingest(g, inf, out);
    if (decomp->parsed()) return run_decompose(g, df, out);
    if (feat->parsed()) return run_featurize(g, ff, out);
    if (tr->parsed()) return run_train(g, tf, out);
    if (ev->parsed()) return run_eval(g, ef, out);
    if (rp->parsed()) return run_report(g, report_path, out);
  } catch (const UsageError& e) {
    err << "tdafault: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "tdafault: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    err << "tdafault: malformed JSON input: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "tdafault: " << e.what() << "\n";
    return kExitData;
  }
  err << "tdafault: no command given\n";
  return kExitUsage;
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace tdafault::cli
