// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepengine/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "sepengine/checkpoint.hpp"
#include "sepengine/error.hpp"
#include "sepengine/manifest.hpp"
#include "sepengine/metrics.hpp"
#include "sepengine/wav.hpp"

namespace sepengine {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// FNV-1a, stable across platforms unlike std::hash.
std::uint64_t HashTag(const std::string& tag) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t Seed(std::uint64_t master, const std::string& tag, std::uint64_t index) {
  return Rng::Mix(Rng::Mix(master ^ HashTag(tag)) + index);
}

std::string Num(double v) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string Padded(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", i);
  return buf;
}

std::string JoinLabels(const std::vector<int>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(labels[i]);
  }
  return out;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : width_(header.size()) { Row(header); }

  void Row(const std::vector<std::string>& fields) {
    if (fields.size() != width_) throw std::logic_error("csv row width mismatch");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) text_ += ',';
      text_ += fields[i];
    }
    text_ += '\n';
  }

  const std::string& text() const { return text_; }

 private:
  std::size_t width_;
  std::string text_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t Column(const std::string& name, const fs::path& origin) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ValidationError(origin.string() + " has no column `" + name + "`");
    }
    return static_cast<std::size_t>(it - header.begin());
  }
};

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Table ReadCsv(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("missing file " + path.string());
  std::stringstream ss(ReadTextFile(path));
  Table t;
  std::string line;
  if (!std::getline(ss, line)) throw ValidationError("empty csv " + path.string());
  t.header = SplitCsvLine(line);
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    t.rows.push_back(SplitCsvLine(line));
    if (t.rows.back().size() != t.header.size()) {
      throw ValidationError(path.string() + ": ragged row " + std::to_string(t.rows.size() + 1));
    }
  }
  return t;
}

// Rejects keys outside `allowed`, so typos in a config fail loudly.
void CheckKeys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; })) {
      throw ValidationError("unknown config key `" + where + "." + key + "`");
    }
  }
}

template <typename T>
void Read(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

json ClassToJson(const SourceClass& c) {
  json params = json::object();
  for (const auto& [k, r] : c.params) params[k] = {r.lo, r.hi};
  return {{"id", c.id},
          {"name", c.name},
          {"kind", ToString(c.kind)},
          {"band_hz", {c.band_lo_hz, c.band_hi_hz}},
          {"params", params}};
}

SourceClass ClassFromJson(const json& j) {
  CheckKeys(j, {"id", "name", "kind", "band_hz", "params"}, "corpus.classes[]");
  SourceClass c;
  c.id = j.at("id").get<int>();
  c.name = j.at("name").get<std::string>();
  c.kind = GeneratorKindFromString(j.at("kind").get<std::string>());
  const auto band = j.at("band_hz").get<std::vector<double>>();
  if (band.size() != 2) throw ValidationError("band_hz of class " + c.name + " needs two values");
  c.band_lo_hz = band[0];
  c.band_hi_hz = band[1];
  for (const auto& [k, v] : j.at("params").items()) {
    const auto r = v.get<std::vector<double>>();
    if (r.size() != 2) throw ValidationError("parameter " + k + " of " + c.name + " needs [lo, hi]");
    c.params[k] = {r[0], r[1]};
  }
  return c;
}

struct Layout {
  fs::path root;
  fs::path corpus() const { return root / "corpus"; }
  fs::path manifest(const std::string& split) const { return corpus() / (split + ".jsonl"); }
  fs::path hidden() const { return corpus() / "hidden" / "natural_stems.jsonl"; }
  fs::path checkpoint(const std::string& name) const { return root / "checkpoints" / (name + ".json"); }
};

void RequireFile(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw ValidationError(what + " not found: " + p.string());
}

Checkpoint LoadMatchingCheckpoint(const RunConfig& cfg, const fs::path& path) {
  RequireFile(path, "checkpoint");
  auto ckpt = LoadCheckpoint(path);
  const int classes = static_cast<int>(cfg.Classes().size());
  if (ckpt.params.classes != classes) {
    throw ValidationError("checkpoint has " + std::to_string(ckpt.params.classes) +
                          " classes but the config defines " + std::to_string(classes));
  }
  return ckpt;
}

std::vector<int> Others(const std::vector<int>& labels, int label) {
  std::vector<int> out;
  for (int l : labels) {
    if (l != label) out.push_back(l);
  }
  return out;
}

TrainOptions MakeTrainOptions(const RunConfig& cfg) {
  TrainOptions t;
  t.epochs = cfg.separator.epochs;
  t.silence_rate = cfg.separator.silence_rate;
  t.batch_size = cfg.separator.batch_size;
  t.lambda = cfg.separator.lambda;
  t.proportions = cfg.separator.proportions;
  t.sample_query_modes = cfg.separator.sample_query_modes;
  t.threads = cfg.threads;
  t.decay = cfg.separator.decay;
  return t;
}

}  // namespace

std::vector<SourceClass> RunConfig::Classes() const {
  if (corpus.class_set == "default") return DefaultClasses();
  if (corpus.class_set == "disjoint") return DisjointClasses();
  if (corpus.class_set == "custom") return corpus.custom_classes;
  throw ValidationError("unknown class_set `" + corpus.class_set + "`");
}

void RunConfig::Validate() const {
  const auto& c = corpus;
  if (c.sample_rate <= 0) throw ValidationError("corpus.sample_rate must be positive");
  if (!(c.duration_s > 0.0)) throw ValidationError("corpus.duration_s must be positive");
  const auto classes = Classes();
  ValidateClassSet(classes, c.sample_rate);
  if (c.clean_per_class < 0 || c.train_clips < 0 || c.valid_clips < 0 || c.eval_clips < 0 ||
      c.natural_clips < 0) {
    throw ValidationError("corpus clip counts must be non-negative");
  }
  if (c.min_labels < 2 || c.max_labels < c.min_labels) {
    throw ValidationError("corpus labels per clip must satisfy 2 <= min_labels <= max_labels");
  }
  if (c.max_labels > static_cast<int>(classes.size())) {
    throw ValidationError("corpus.max_labels exceeds the number of classes");
  }
  if (c.snr.lo_db > c.snr.hi_db) throw ValidationError("corpus.snr_db has lo > hi");
  stft.Validate();

  const auto& s = separator;
  if (s.optimizer.step < 0.0) throw ValidationError("separator.step must be non-negative");
  for (double b : {s.optimizer.beta1, s.optimizer.beta2}) {
    if (b < 0.0 || b >= 1.0) throw ValidationError("separator moment decay rates must lie in [0, 1)");
  }
  if (!(s.optimizer.epsilon > 0.0)) throw ValidationError("separator.adam_epsilon must be positive");
  if (s.decay.patience < 1) throw ValidationError("separator.plateau_patience must be positive");
  if (!(s.decay.factor > 0.0 && s.decay.factor <= 1.0)) {
    throw ValidationError("separator.plateau_factor must lie in (0, 1]");
  }
  if (s.decay.min_step < 0.0) throw ValidationError("separator.min_step must be non-negative");
  if (s.lambda < 0.0 || s.lambda > 1.0) throw ValidationError("separator.lambda must lie in [0, 1]");
  if (s.silence_rate < 0.0 || s.silence_rate >= 1.0) {
    throw ValidationError("separator.silence_rate must lie in [0, 1)");
  }
  if (s.epochs < 0) throw ValidationError("separator.epochs must be non-negative");
  if (s.batch_size < 1) throw ValidationError("separator.batch_size must be positive");
  const auto& q = s.proportions;
  if (q.pos_only < 0 || q.neg_only < 0 || q.pos_neg < 0 || q.pos_only + q.neg_only + q.pos_neg <= 0) {
    throw ValidationError("separator.query_proportions must be non-negative with a positive sum");
  }

  engine.thresholds.Validate();
  if (engine.schedule.first_epochs < 0 || engine.schedule.later_epochs < 0) {
    throw ValidationError("engine epochs must be non-negative");
  }
  if (engine.iterations < 0) throw ValidationError("engine.iterations must be non-negative");
  if (threads < 1) throw ValidationError("threads must be at least 1");
}

json RunConfigToJson(const RunConfig& cfg) {
  const auto& c = cfg.corpus;
  json corpus = {{"sample_rate", c.sample_rate},
                 {"duration_s", c.duration_s},
                 {"class_set", c.class_set},
                 {"clean_per_class", c.clean_per_class},
                 {"train_clips", c.train_clips},
                 {"valid_clips", c.valid_clips},
                 {"eval_clips", c.eval_clips},
                 {"natural_clips", c.natural_clips},
                 {"min_labels", c.min_labels},
                 {"max_labels", c.max_labels},
                 {"snr_db", {c.snr.lo_db, c.snr.hi_db}}};
  if (c.class_set == "custom") {
    json classes = json::array();
    for (const auto& k : c.custom_classes) classes.push_back(ClassToJson(k));
    corpus["classes"] = classes;
  }
  const auto& s = cfg.separator;
  json separator = {{"step", s.optimizer.step},
                    {"beta1", s.optimizer.beta1},
                    {"beta2", s.optimizer.beta2},
                    {"adam_epsilon", s.optimizer.epsilon},
                    {"plateau_patience", s.decay.patience},
                    {"plateau_factor", s.decay.factor},
                    {"min_step", s.decay.min_step},
                    {"lambda", s.lambda},
                    {"silence_rate", s.silence_rate},
                    {"epochs", s.epochs},
                    {"batch_size", s.batch_size},
                    {"query_proportions",
                     {{"pos_only", s.proportions.pos_only},
                      {"neg_only", s.proportions.neg_only},
                      {"pos_neg", s.proportions.pos_neg}}},
                    {"sample_query_modes", s.sample_query_modes}};
  const auto& e = cfg.engine;
  json engine = {{"itt_db", e.thresholds.itt_db},
                 {"sst_db", e.thresholds.sst_db},
                 {"first_epochs", e.schedule.first_epochs},
                 {"later_epochs", e.schedule.later_epochs},
                 {"iterations", e.iterations}};
  return {{"seed", cfg.seed},       {"output_dir", cfg.output_dir},
          {"threads", cfg.threads}, {"corpus", corpus},
          {"stft", StftConfigToJson(cfg.stft)},
          {"separator", separator}, {"engine", engine}};
}

RunConfig RunConfigFromJson(const json& j) {
  RunConfig cfg;
  try {
    CheckKeys(j, {"seed", "output_dir", "threads", "corpus", "stft", "separator", "engine"}, "config");
    Read(j, "seed", cfg.seed);
    Read(j, "output_dir", cfg.output_dir);
    Read(j, "threads", cfg.threads);
    if (j.contains("corpus")) {
      const auto& c = j.at("corpus");
      CheckKeys(c,
                {"sample_rate", "duration_s", "class_set", "classes", "clean_per_class",
                 "train_clips", "valid_clips", "eval_clips", "natural_clips", "min_labels",
                 "max_labels", "snr_db"},
                "corpus");
      auto& o = cfg.corpus;
      Read(c, "sample_rate", o.sample_rate);
      Read(c, "duration_s", o.duration_s);
      Read(c, "class_set", o.class_set);
      Read(c, "clean_per_class", o.clean_per_class);
      Read(c, "train_clips", o.train_clips);
      Read(c, "valid_clips", o.valid_clips);
      Read(c, "eval_clips", o.eval_clips);
      Read(c, "natural_clips", o.natural_clips);
      Read(c, "min_labels", o.min_labels);
      Read(c, "max_labels", o.max_labels);
      if (c.contains("snr_db")) {
        const auto r = c.at("snr_db").get<std::vector<double>>();
        if (r.size() != 2) throw ValidationError("corpus.snr_db needs [lo, hi]");
        o.snr = {r[0], r[1]};
      }
      if (c.contains("classes")) {
        if (!c.contains("class_set")) o.class_set = "custom";
        for (const auto& k : c.at("classes")) o.custom_classes.push_back(ClassFromJson(k));
      }
    }
    if (j.contains("stft")) {
      CheckKeys(j.at("stft"), {"preset", "n_fft", "hop", "window", "center"}, "stft");
      cfg.stft = StftConfigFromJson(j.at("stft"));
    }
    if (j.contains("separator")) {
      const auto& s = j.at("separator");
      CheckKeys(s,
                {"step", "beta1", "beta2", "adam_epsilon", "plateau_patience", "plateau_factor",
                 "min_step", "lambda", "silence_rate", "epochs",
                 "batch_size", "query_proportions", "sample_query_modes"},
                "separator");
      auto& o = cfg.separator;
      Read(s, "step", o.optimizer.step);
      Read(s, "beta1", o.optimizer.beta1);
      Read(s, "beta2", o.optimizer.beta2);
      Read(s, "adam_epsilon", o.optimizer.epsilon);
      Read(s, "plateau_patience", o.decay.patience);
      Read(s, "plateau_factor", o.decay.factor);
      Read(s, "min_step", o.decay.min_step);
      Read(s, "lambda", o.lambda);
      Read(s, "silence_rate", o.silence_rate);
      Read(s, "epochs", o.epochs);
      Read(s, "batch_size", o.batch_size);
      Read(s, "sample_query_modes", o.sample_query_modes);
      if (s.contains("query_proportions")) {
        const auto& q = s.at("query_proportions");
        CheckKeys(q, {"pos_only", "neg_only", "pos_neg"}, "separator.query_proportions");
        Read(q, "pos_only", o.proportions.pos_only);
        Read(q, "neg_only", o.proportions.neg_only);
        Read(q, "pos_neg", o.proportions.pos_neg);
      }
    }
    if (j.contains("engine")) {
      const auto& e = j.at("engine");
      CheckKeys(e, {"itt_db", "sst_db", "first_epochs", "later_epochs", "iterations"}, "engine");
      auto& o = cfg.engine;
      Read(e, "itt_db", o.thresholds.itt_db);
      Read(e, "sst_db", o.thresholds.sst_db);
      Read(e, "first_epochs", o.schedule.first_epochs);
      Read(e, "later_epochs", o.schedule.later_epochs);
      Read(e, "iterations", o.iterations);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  cfg.Validate();
  return cfg;
}

RunConfig LoadRunConfig(const fs::path& path) {
  const auto text = ReadTextFile(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return RunConfigFromJson(j);
}

void SaveRunConfig(const RunConfig& cfg, const fs::path& path) {
  WriteTextFile(path, RunConfigToJson(cfg).dump(2) + "\n");
}

fs::path DefaultOutputRoot() {
  if (const char* env = std::getenv("SEPENGINE_OUT"); env && *env) return env;
  return fs::path("runs");
}

fs::path RunDirectory(const RunConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  return DefaultOutputRoot() / "run";
}

std::vector<MixtureClip> LoadClips(const fs::path& manifest) {
  RequireFile(manifest, "manifest");
  const auto base = manifest.parent_path();
  std::vector<MixtureClip> out;
  for (const auto& r : ReadManifest(manifest)) {
    MixtureClip clip;
    clip.id = r.clip_id;
    clip.labels = r.labels;
    clip.waveform = ReadWav(base / r.wav);
    if (clip.waveform.sample_rate != r.sample_rate) {
      throw ValidationError("clip " + r.clip_id + " sample rate disagrees with its manifest");
    }
    clip.gains.assign(r.labels.size(), 1.0);
    if (r.stems) {
      if (r.stems->size() != r.labels.size()) {
        throw ValidationError("clip " + r.clip_id + " lists a different number of stems and labels");
      }
      std::vector<CleanTrack> stems;
      for (std::size_t i = 0; i < r.stems->size(); ++i) {
        CleanTrack t;
        t.waveform = ReadWav(base / (*r.stems)[i]);
        RequireSameShape(t.waveform, clip.waveform, "stem");
        t.label = r.labels[i];
        stems.push_back(std::move(t));
      }
      clip.stems = std::move(stems);
    }
    out.push_back(std::move(clip));
  }
  return out;
}

SynthSummary CmdSynth(const RunConfig& cfg) {
  cfg.Validate();
  const Layout dirs{RunDirectory(cfg)};
  const auto classes = cfg.Classes();
  const auto& c = cfg.corpus;
  SaveRunConfig(cfg, dirs.root / "config.json");
  SynthSummary summary;

  std::vector<ManifestRecord> clean;
  for (const auto& cls : classes) {
    for (int i = 0; i < c.clean_per_class; ++i) {
      const auto seed = Seed(cfg.seed, "clean", static_cast<std::uint64_t>(cls.id) * 100000 + i);
      const auto track = GenerateSource(cls, c.duration_s, c.sample_rate, seed);
      ManifestRecord r;
      r.clip_id = "clean_" + cls.name + "_" + Padded(i);
      r.wav = "clean/" + r.clip_id + ".wav";
      r.labels = {cls.id};
      r.sample_rate = c.sample_rate;
      r.duration = track.waveform.duration();
      r.extra["generator_seed"] = seed;
      r.extra["params"] = track.params;
      WriteWav(track.waveform, dirs.corpus() / r.wav);
      clean.push_back(std::move(r));
    }
  }
  WriteManifest(clean, dirs.manifest("clean"));
  summary.clean = static_cast<int>(clean.size());

  std::vector<ManifestRecord> hidden;
  const auto split = [&](const std::string& name, int count, bool natural) {
    std::vector<ManifestRecord> records;
    for (int i = 0; i < count; ++i) {
      Rng rng(Seed(cfg.seed, name, static_cast<std::uint64_t>(i)));
      const int m = c.min_labels + static_cast<int>(rng.Index(c.max_labels - c.min_labels + 1));
      std::vector<int> ids;
      for (const auto& cls : classes) ids.push_back(cls.id);
      Shuffle(ids, rng);
      std::vector<CleanTrack> stems;
      for (int k = 0; k < m; ++k) {
        stems.push_back(GenerateSource(classes[ids[k]], c.duration_s, c.sample_rate, rng.NextU64()));
      }
      auto clip = BuildMixture(stems, c.snr, rng.NextU64(), true);

      ManifestRecord r;
      r.clip_id = name + "_" + Padded(i);
      r.wav = "clips/" + r.clip_id + ".wav";
      r.labels = clip.labels;
      r.sample_rate = c.sample_rate;
      r.duration = clip.waveform.duration();
      r.extra["gains"] = clip.gains;
      WriteWav(clip.waveform, dirs.corpus() / r.wav);

      std::vector<std::string> stem_paths;
      for (int k = 0; k < m; ++k) {
        const std::string stem = "stems/" + r.clip_id + "_" + std::to_string(k) + ".wav";
        stem_paths.push_back(stem);
        WriteWav(ScaledStem(clip, k), (natural ? dirs.corpus() / "hidden" : dirs.corpus()) / stem);
      }
      if (natural) {
        ManifestRecord h = r;
        h.wav = "../" + r.wav;
        h.stems = stem_paths;
        hidden.push_back(std::move(h));
      } else {
        r.stems = stem_paths;
      }
      records.push_back(std::move(r));
    }
    WriteManifest(records, dirs.manifest(name));
    return static_cast<int>(records.size());
  };
  summary.train = split("train", c.train_clips, false);
  summary.valid = split("valid", c.valid_clips, false);
  summary.eval = split("eval", c.eval_clips, false);
  summary.natural = split("natural", c.natural_clips, true);
  WriteManifest(hidden, dirs.hidden());
  return summary;
}

TrainSummary CmdTrain(const RunConfig& cfg, const std::string& name) {
  cfg.Validate();
  const Layout dirs{RunDirectory(cfg)};
  const auto out_dir = dirs.root / "train" / name;
  const int classes = static_cast<int>(cfg.Classes().size());
  const auto clips = LoadClips(dirs.manifest("train"));
  const auto valid = LoadClips(dirs.manifest("valid"));
  SaveRunConfig(cfg, out_dir / "config.json");

  std::vector<TrainExample> examples;
  for (const auto& clip : clips) {
    if (!clip.stems) throw ValidationError("training clip " + clip.id + " has no stems");
    for (std::size_t i = 0; i < clip.labels.size(); ++i) {
      TrainExample ex;
      ex.mixture = clip.waveform;
      ex.target = (*clip.stems)[i].waveform;
      ex.pos_class = clip.labels[i];
      ex.neg_classes = Others(clip.labels, clip.labels[i]);
      ex.mixture_labels = clip.labels;
      ex.query = EncodeQuery(ex.pos_class, ex.neg_classes, classes, QueryMode::kPosNeg);
      examples.push_back(std::move(ex));
    }
  }
  if (examples.empty()) throw ValidationError("the training manifest is empty");
  VectorExampleSource source(std::move(examples));

  auto p0 = SeparatorParams::Zeros(cfg.stft.bins(), classes);
  p0.optimizer = cfg.separator.optimizer;
  auto options = MakeTrainOptions(cfg);
  Csv csv({"epoch", "loss", "silence_examples", "valid_loss", "step", "valid_sdri", "valid_sisdri"});
  TrainSummary summary;
  if (options.epochs == 0) {
    const auto v = EvaluateSupervised(valid, p0, cfg.stft);
    summary.valid_sdri = v.sdri;
    summary.valid_sisdri = v.sisdri;
  }
  if (!valid.empty()) {
    options.validation_loss = [&](const SeparatorParams& p) {
      return ValidationLoss(valid, p, cfg.stft, options.lambda);
    };
  }
  options.on_epoch = [&](const EpochStats& s, const SeparatorParams& p) {
    const auto v = EvaluateSupervised(valid, p, cfg.stft);
    csv.Row({std::to_string(s.epoch), Num(s.mean_loss), std::to_string(s.silence_examples),
             Num(s.validation_loss), Num(s.step), Num(v.sdri), Num(v.sisdri)});
    summary.valid_sdri = v.sdri;
    summary.valid_sisdri = v.sisdri;
  };
  Rng rng(Seed(cfg.seed, "train", 0));
  auto result = Train(source, std::move(p0), cfg.stft, options, rng);

  summary.checkpoint = dirs.checkpoint(name);
  summary.epoch_loss = result.epoch_loss;
  Checkpoint out{cfg.stft, result.params, cfg.seed, std::nullopt};
  if (result.state.t > 0) out.optimizer_state = std::move(result.state);
  SaveCheckpoint(out, summary.checkpoint);
  WriteTextFile(out_dir / "loss.csv", csv.text());
  return summary;
}

EngineSummary CmdEngine(const RunConfig& cfg, const fs::path& checkpoint) {
  cfg.Validate();
  const Layout dirs{RunDirectory(cfg)};
  const auto ckpt = LoadMatchingCheckpoint(cfg, checkpoint);
  const auto& stft = ckpt.stft;
  const auto natural = LoadClips(dirs.manifest("natural"));
  const auto valid = LoadClips(dirs.manifest("valid"));
  SaveRunConfig(cfg, dirs.root / "engine" / "config.json");

  EnginePools pools;
  const auto clean_path = dirs.manifest("clean");
  RequireFile(clean_path, "manifest");
  for (const auto& r : ReadManifest(clean_path)) {
    TrackCandidate t;
    t.label = r.labels.front();
    t.waveform = ReadWav(dirs.corpus() / r.wav);
    t.source_clip = r.clip_id;
    pools.originals.push_back(std::move(t));
  }

  EngineOptions options;
  options.thresholds = cfg.engine.thresholds;
  options.schedule = cfg.engine.schedule;
  options.train = MakeTrainOptions(cfg);
  options.snr = cfg.corpus.snr;

  EngineSummary summary;
  const auto base = EvaluateSupervised(valid, ckpt.params, stft);
  summary.baseline_sdri = base.sdri;
  summary.baseline_sisdri = base.sisdri;

  Csv report({"iteration", "clips_processed", "accepted_itt", "accepted_sst", "accepted_total",
              "pool_tracks", "sst_tracks", "pool_hours_before", "pool_hours_after", "epochs",
              "final_loss", "baseline_sdri", "validation_sdri", "validation_sisdri", "starved"});
  Csv timing({"iteration", "wall_clock_s"});

  SeparatorParams params = ckpt.params;
  pools.optimizer = ckpt.optimizer_state;
  Rng rng(Seed(cfg.seed, "engine", 0));
  for (int it = 1; it <= cfg.engine.iterations; ++it) {
    const std::size_t before = pools.single_source_pool.size();
    auto result = RunEngineIteration(std::move(pools), natural, std::move(params), stft, options,
                                     valid, rng);
    pools = std::move(result.pools);
    params = std::move(result.params);
    const auto& r = result.report;
    for (std::size_t i = before; i < pools.single_source_pool.size(); ++i) {
      const auto& t = pools.single_source_pool[i];
      WriteWav(t.waveform, dirs.root / "pool" / ("iter" + std::to_string(it)) /
                               (t.source_clip + "_" + std::to_string(t.label) + ".wav"));
    }
    SaveCheckpoint({stft, params, cfg.seed, pools.optimizer},
                   dirs.checkpoint("engine_iter" + std::to_string(it)));
    report.Row({std::to_string(r.iteration), std::to_string(r.clips_processed),
                std::to_string(r.accepted_itt), std::to_string(r.accepted_sst),
                std::to_string(r.accepted_total), std::to_string(pools.single_source_pool.size()),
                std::to_string(pools.sst_pool.size()), Num(r.pool_hours_before),
                Num(r.pool_hours_after), std::to_string(r.epoch_loss.size()),
                Num(r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back()), Num(summary.baseline_sdri),
                Num(r.validation_sdri), Num(r.validation_sisdri), r.starved ? "1" : "0"});
    timing.Row({std::to_string(r.iteration), Num(r.wall_clock_s)});
    summary.reports.push_back(r);
  }
  summary.starved = cfg.engine.iterations > 0 && pools.accepted_clips.empty();

  const auto track_path = [](const TrackCandidate& t) {
    return "iter" + std::to_string(t.iteration) + "/" + t.source_clip + "_" +
           std::to_string(t.label) + ".wav";
  };
  const auto track_record = [&](const TrackCandidate& t) {
    ManifestRecord r;
    r.clip_id = t.source_clip + "_" + std::to_string(t.label);
    r.wav = track_path(t);
    r.labels = {t.label};
    r.sample_rate = t.waveform.sample_rate;
    r.duration = t.waveform.duration();
    r.provenance = "engine-iter" + std::to_string(t.iteration);
    r.extra["source_clip"] = t.source_clip;
    r.extra["iteration"] = t.iteration;
    r.extra["re_sdr"] = t.scores.sdr_like.value;
    r.extra["re_sisdr"] = t.scores.sisdr_like.value;
    r.extra["tier"] = ToString(FilterCandidateClip(t.scores, options.thresholds));
    return r;
  };
  std::vector<ManifestRecord> pool_records, sst_records;
  for (const auto& t : pools.single_source_pool) pool_records.push_back(track_record(t));
  for (const auto& [clip_id, t] : pools.sst_pool) {
    auto r = track_record(t);
    r.extra["mixture_wav"] = "../corpus/clips/" + clip_id + ".wav";
    sst_records.push_back(std::move(r));
  }
  WriteManifest(pool_records, dirs.root / "pool" / "pool.jsonl");
  WriteManifest(sst_records, dirs.root / "pool" / "sst.jsonl");
  std::string scores;
  for (const auto& s : pools.history) {
    scores += json{{"clip_id", s.clip_id},
                   {"iteration", s.iteration},
                   {"re_sdr", s.scores.sdr_like.value},
                   {"re_sisdr", s.scores.sisdr_like.value},
                   {"tier", ToString(s.tier)}}
                  .dump();
    scores += '\n';
  }
  WriteTextFile(dirs.root / "pool" / "scores.jsonl", scores);
  WriteTextFile(dirs.root / "engine" / "report.csv", report.text());
  WriteTextFile(dirs.root / "engine" / "timing.csv", timing.text());

  summary.checkpoint = dirs.checkpoint("engine");
  SaveCheckpoint({stft, params, ckpt.seed, pools.optimizer}, summary.checkpoint);
  return summary;
}

std::string ToString(Predictor p) {
  switch (p) {
    case Predictor::kModel: return "model";
    case Predictor::kStems: return "stems";
    case Predictor::kMixture: return "mixture";
  }
  return "unknown";
}

Predictor PredictorFromString(const std::string& name) {
  for (auto p : {Predictor::kModel, Predictor::kStems, Predictor::kMixture}) {
    if (ToString(p) == name) return p;
  }
  throw ValidationError("unknown predictor `" + name + "` (model, stems or mixture)");
}

double EvalSummary::Get(const std::string& name) const {
  for (const auto& [k, v] : aggregates) {
    if (k == name) return v;
  }
  throw ValidationError("evaluation summary has no `" + name + "`");
}

EvalSummary CmdEval(const RunConfig& cfg, const fs::path& checkpoint, const std::string& name,
                    Predictor predictor) {
  cfg.Validate();
  const Layout dirs{RunDirectory(cfg)};
  const int classes = static_cast<int>(cfg.Classes().size());
  std::optional<Checkpoint> ckpt;
  if (predictor == Predictor::kModel) ckpt = LoadMatchingCheckpoint(cfg, checkpoint);
  const auto clips = LoadClips(dirs.manifest("eval"));
  EvalSummary summary;
  summary.dir = dirs.root / "eval" / name;
  SaveRunConfig(cfg, summary.dir / "config.json");

  const auto separate = [&](const MixtureClip& clip, std::optional<int> pos,
                            const std::vector<int>& neg, QueryMode mode) {
    const auto q = EncodeQuery(pos, neg, classes, mode);
    return Separate(clip.waveform, q, ckpt->params, ckpt->stft).estimate;
  };

  struct Mean {
    double sum = 0.0;
    int n = 0;
    void Add(double v) { sum += v, ++n; }
    double Value() const { return n ? sum / n : 0.0; }
  };
  std::map<std::string, Mean> agg;

  Csv supervised({"clip_id", "labels", "label", "query_mode", "sdr", "sdri", "sisdr", "sisdri"});
  const std::vector<QueryMode> modes =
      predictor == Predictor::kModel ? std::vector<QueryMode>{QueryMode::kPosNeg, QueryMode::kPosOnly}
                                     : std::vector<QueryMode>{QueryMode::kPosNeg};
  for (const auto& clip : clips) {
    if (!clip.stems) throw ValidationError("evaluation clip " + clip.id + " has no stems");
    const std::string m = std::to_string(clip.labels.size());
    for (std::size_t i = 0; i < clip.labels.size(); ++i) {
      const int label = clip.labels[i];
      const auto& ref = (*clip.stems)[i].waveform;
      for (auto mode : modes) {
        Waveform est;
        switch (predictor) {
          case Predictor::kModel: est = separate(clip, label, Others(clip.labels, label), mode); break;
          case Predictor::kStems: est = ref; break;
          case Predictor::kMixture: est = clip.waveform; break;
        }
        const double sdr = Sdr(est, ref).value;
        const double sdri = SdrImprovement(est, ref, clip.waveform).value;
        const double sisdr = SiSdr(est, ref).value;
        const double sisdri = SiSdrImprovement(est, ref, clip.waveform).value;
        const std::string tag = ToString(mode);
        supervised.Row({clip.id, JoinLabels(clip.labels), std::to_string(label), tag, Num(sdr),
                        Num(sdri), Num(sisdr), Num(sisdri)});
        agg["sdr_" + tag].Add(sdr);
        agg["sdri_" + tag].Add(sdri);
        agg["sisdr_" + tag].Add(sisdr);
        agg["sisdri_" + tag].Add(sisdri);
        agg["sdri_" + tag + "_m" + m].Add(sdri);
      }
    }
  }

  Csv silence({"clip_id", "labels", "query_label", "silence_sdr", "silence_sisdr"});
  for (const auto& clip : clips) {
    for (int k = 0; k < classes; ++k) {
      if (std::find(clip.labels.begin(), clip.labels.end(), k) != clip.labels.end()) continue;
      Waveform est;
      switch (predictor) {
        case Predictor::kModel: est = separate(clip, k, {}, QueryMode::kPosOnly); break;
        case Predictor::kStems: est = Waveform::Zeros(clip.waveform.size(), clip.waveform.sample_rate); break;
        case Predictor::kMixture: est = clip.waveform; break;
      }
      const double s = SilenceSdr(est, clip.waveform).value;
      const double si = SilenceSiSdr(est, clip.waveform).value;
      silence.Row({clip.id, JoinLabels(clip.labels), std::to_string(k), Num(s), Num(si)});
      agg["silence_sdr"].Add(s);
      agg["silence_sisdr"].Add(si);
    }
  }

  Csv remix({"clip_id", "labels", "re_sdr", "re_sisdr", "tier"});
  if (predictor == Predictor::kModel) {
    const auto natural = LoadClips(dirs.manifest("natural"));
    for (const auto& clip : natural) {
      const auto scores = RemixAndScore(SeparateAllLabels(clip, ckpt->params, ckpt->stft), clip.waveform);
      const auto tier = FilterCandidateClip(scores, cfg.engine.thresholds);
      remix.Row({clip.id, JoinLabels(clip.labels), Num(scores.sdr_like.value),
                 Num(scores.sisdr_like.value), ToString(tier)});
      agg["re_sdr"].Add(scores.sdr_like.value);
      agg["re_sisdr"].Add(scores.sisdr_like.value);
      agg["re_sdr_over_15"].Add(scores.sdr_like.value > 15.0 ? 1.0 : 0.0);
      agg["re_sisdr_over_15"].Add(scores.sisdr_like.value > 15.0 ? 1.0 : 0.0);
    }
  }

  Csv csv({"metric", "value", "count"});
  for (const auto& [k, v] : agg) {
    csv.Row({k, Num(v.Value()), std::to_string(v.n)});
    summary.aggregates.emplace_back(k, v.Value());
  }
  WriteTextFile(summary.dir / "supervised.csv", supervised.text());
  WriteTextFile(summary.dir / "silence.csv", silence.text());
  WriteTextFile(summary.dir / "remix.csv", remix.text());
  WriteTextFile(summary.dir / "summary.csv", csv.text());
  return summary;
}

std::string CmdReport(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw ValidationError("run directory not found: " + run_dir.string());

  std::vector<fs::path> train_dirs, eval_dirs;
  for (const auto& [sub, into] : {std::pair{"train", &train_dirs}, std::pair{"eval", &eval_dirs}}) {
    if (!fs::is_directory(run_dir / sub)) {
      throw ValidationError("incomplete run: missing " + (run_dir / sub).string());
    }
    for (const auto& e : fs::directory_iterator(run_dir / sub)) {
      if (e.is_directory()) into->push_back(e.path());
    }
    std::sort(into->begin(), into->end());
  }
  if (train_dirs.empty()) throw ValidationError("incomplete run: no trained model under train/");
  if (eval_dirs.empty()) throw ValidationError("incomplete run: no evaluation under eval/");

  std::ostringstream text;
  char line[256];

  Csv training({"model", "epochs", "final_loss", "valid_sdri", "valid_sisdri"});
  text << "Training\n";
  std::snprintf(line, sizeof line, "  %-16s %8s %12s %12s %12s\n", "model", "epochs", "final_loss",
                "valid_SDRi", "valid_SISDRi");
  text << line;
  for (const auto& dir : train_dirs) {
    const auto path = dir / "loss.csv";
    const auto t = ReadCsv(path);
    const std::string model = dir.filename().string();
    std::vector<std::string> last = {"0", "", "", ""};
    if (!t.rows.empty()) {
      const auto& r = t.rows.back();
      last = {r[t.Column("epoch", path)], r[t.Column("loss", path)], r[t.Column("valid_sdri", path)],
              r[t.Column("valid_sisdri", path)]};
    }
    training.Row({model, last[0], last[1], last[2], last[3]});
    std::snprintf(line, sizeof line, "  %-16s %8s %12s %12s %12s\n", model.c_str(), last[0].c_str(),
                  last[1].c_str(), last[2].c_str(), last[3].c_str());
    text << line;
  }

  const auto engine_path = run_dir / "engine" / "report.csv";
  const auto engine = ReadCsv(engine_path);
  Csv iterations({"iteration", "clips_processed", "accepted_itt", "accepted_sst", "accepted_total",
                  "pool_hours_after", "validation_sdri", "validation_sisdri"});
  text << "\nEngine iterations\n";
  std::snprintf(line, sizeof line, "  %4s %9s %6s %6s %8s %11s %12s %12s\n", "iter", "processed",
                "itt", "sst", "accepted", "pool_hours", "valid_SDRi", "valid_SISDRi");
  text << line;
  for (const auto& r : engine.rows) {
    std::vector<std::string> f;
    for (const char* col : {"iteration", "clips_processed", "accepted_itt", "accepted_sst",
                            "accepted_total", "pool_hours_after", "validation_sdri",
                            "validation_sisdri"}) {
      f.push_back(r[engine.Column(col, engine_path)]);
    }
    iterations.Row(f);
    std::snprintf(line, sizeof line, "  %4s %9s %6s %6s %8s %11s %12s %12s\n", f[0].c_str(),
                  f[1].c_str(), f[2].c_str(), f[3].c_str(), f[4].c_str(), f[5].c_str(),
                  f[6].c_str(), f[7].c_str());
    text << line;
  }

  const std::vector<std::string> metrics = {"sdri_pos_neg",  "sdri_pos_only",  "sisdri_pos_neg",
                                            "silence_sdr",   "silence_sisdr",  "re_sdr",
                                            "re_sisdr",      "re_sdr_over_15"};
  std::vector<std::string> header = {"eval"};
  header.insert(header.end(), metrics.begin(), metrics.end());
  Csv evaluation(header);
  text << "\nEvaluation\n  " << "eval";
  for (const auto& m : metrics) text << ' ' << m;
  text << '\n';
  for (const auto& dir : eval_dirs) {
    const auto path = dir / "summary.csv";
    const auto t = ReadCsv(path);
    std::map<std::string, std::string> values;
    for (const auto& r : t.rows) values[r[t.Column("metric", path)]] = r[t.Column("value", path)];
    std::vector<std::string> row = {dir.filename().string()};
    for (const auto& m : metrics) row.push_back(values.count(m) ? values[m] : "");
    evaluation.Row(row);
    text << "  " << row[0];
    for (std::size_t i = 1; i < row.size(); ++i) text << ' ' << (row[i].empty() ? "-" : row[i]);
    text << '\n';
  }

  const auto out = run_dir / "report";
  WriteTextFile(out / "training.csv", training.text());
  WriteTextFile(out / "iterations.csv", iterations.text());
  WriteTextFile(out / "evaluation.csv", evaluation.text());
  WriteTextFile(out / "summary.txt", text.str());
  return text.str();
}

}  // namespace sepengine
