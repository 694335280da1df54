// Copyright 2026 The focalstage Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "focalstage/checkpoint.h"
#include "focalstage/dataio.h"
#include "focalstage/eval.h"
#include "focalstage/explain.h"
#include "focalstage/loss.h"
#include "focalstage/resample.h"
#include "focalstage/stats.h"
#include "focalstage/train.h"

namespace focalstage::cli {
namespace fs = std::filesystem;

namespace {

// Bad flag values and config keys. Reported like parse errors (exit 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FlagType { kValue, kRepeated, kSwitch };

struct FlagSpec {
  const char* name;
  FlagType type;
  const char* help;
};

// Every setting reachable from the command line or a config file. Config
// keys use the same names; '_' and '-' are interchangeable there.
const std::vector<FlagSpec>& AllFlags() {
  static const std::vector<FlagSpec> flags = {
      {"config", FlagType::kValue, "config file of 'key = value' lines; flags override it"},
      {"data", FlagType::kValue, "input CSV (header row required)"},
      {"label", FlagType::kValue, "label column name (default fraud_reported)"},
      {"seed", FlagType::kValue, "master random seed (default 0)"},
      {"epochs", FlagType::kValue, "total training epochs (default 100)"},
      {"lr", FlagType::kValue, "learning rate (default 0.001)"},
      {"batch", FlagType::kValue, "mini-batch size (default 32)"},
      {"hidden", FlagType::kValue, "LSTM hidden units (default 16)"},
      {"folds", FlagType::kValue, "cross-validation folds (default 10)"},
      {"schedule", FlagType::kRepeated,
       "schedule: convex | multistage | nonconvex2 | nonconvex4 | convex:<g> | "
       "nonconvex:<g> | [name=]<kind>:<value>:<first>-<last>,..."},
      {"stage", FlagType::kRepeated,
       "one stage '<convex|power>:<value>:<first>-<last>' of a custom schedule"},
      {"gamma", FlagType::kValue, "final focusing parameter gamma (default 4)"},
      {"convex-epochs", FlagType::kValue,
       "last epoch of the convex stage (default epochs/10, 10 at 100 epochs)"},
      {"intermediate-epochs", FlagType::kValue,
       "last epoch of the gamma/2 stage (default epochs/2, 50 at 100 epochs)"},
      {"optimizer", FlagType::kValue, "adam | sgd (default adam)"},
      {"patience", FlagType::kValue, "early-stopping patience in epochs, 0 = off (default 0)"},
      {"alpha-pos", FlagType::kValue, "constant alpha for y=1 (default: inverse frequency)"},
      {"alpha-neg", FlagType::kValue, "constant alpha for y=0 (default: inverse frequency)"},
      {"resample", FlagType::kValue,
       "none | undersample | oversample | smote | hybrid (default hybrid)"},
      {"ratio", FlagType::kValue, "target minority/majority ratio (default 1)"},
      {"k-neighbors", FlagType::kValue, "SMOTE neighbours (default 5)"},
      {"vif-prune", FlagType::kSwitch, "drop collinear features (VIF) before training"},
      {"vif-threshold", FlagType::kValue, "VIF removal threshold (default 10)"},
      {"threshold", FlagType::kValue, "decision threshold for metrics (default 0.5)"},
      {"checkpoint", FlagType::kRepeated, "checkpoint to explain, as path or name=path"},
      {"background-size", FlagType::kValue, "SHAP background rows (default 50)"},
      {"exact-limit", FlagType::kValue, "max features for exact Shapley (default 12)"},
      {"permutations", FlagType::kValue,
       "permutations when the feature count exceeds --exact-limit (default 256)"},
      {"instances", FlagType::kValue, "rows to explain (default 20)"},
      {"per-instance", FlagType::kSwitch, "also write per-instance attributions"},
      {"jobs", FlagType::kValue, "worker threads (default 1)"},
      {"out-dir", FlagType::kValue, "output directory (default .)"},
      {"rows", FlagType::kValue, "synth: row count (default 2000)"},
      {"positive-rate", FlagType::kValue, "synth: positive fraction (default 0.05)"},
      {"features", FlagType::kValue, "synth: feature count (default 4)"},
      {"separation", FlagType::kValue, "synth: class mean distance per axis (default 1)"},
  };
  return flags;
}

const FlagSpec* FindFlag(const std::string& name) {
  for (const auto& flag : AllFlags()) {
    if (name == flag.name) return &flag;
  }
  return nullptr;
}

struct CommandSpec {
  const char* name;
  const char* help;
  std::vector<std::string> flags;
};

std::vector<std::string> Join(std::initializer_list<std::vector<std::string>> lists) {
  std::vector<std::string> out;
  for (const auto& list : lists) out.insert(out.end(), list.begin(), list.end());
  return out;
}

const std::vector<CommandSpec>& Commands() {
  static const std::vector<std::string> common = {"config", "data", "label", "seed", "jobs",
                                                  "out-dir"};
  static const std::vector<std::string> training = {
      "epochs",   "lr",        "batch",       "hidden",    "schedule",  "stage",
      "gamma",    "convex-epochs", "intermediate-epochs", "optimizer", "patience",
      "alpha-pos", "alpha-neg", "resample",   "ratio",     "k-neighbors", "vif-prune",
      "vif-threshold"};
  static const std::vector<CommandSpec> commands = {
      {"analyze", "chi-square association matrix and VIF pruning trace",
       Join({common, {"vif-threshold"}})},
      {"train", "train one schedule; writes checkpoints and the epoch log",
       Join({common, training})},
      {"compare", "stratified k-fold comparison of schedules; writes metrics and ROC points",
       Join({common, training, {"folds", "threshold"}})},
      {"explain", "SHAP summaries from checkpoints",
       Join({common, {"checkpoint", "background-size", "exact-limit", "permutations",
                      "instances", "per-instance"}})},
      {"report", "merge existing outputs in --out-dir into report.txt", {"config", "out-dir"}},
      {"synth", "write the two-Gaussian imbalanced benchmark as CSV",
       {"config", "seed", "out-dir", "rows", "positive-rate", "features", "separation"}},
  };
  return commands;
}

using RawSettings = std::map<std::string, std::vector<std::string>>;

std::string Trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

RawSettings ReadConfigFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path.string() + "'");
  RawSettings raw;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(line_number) +
                       ": expected 'key = value'");
    }
    std::string key = Trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string value = Trim(line.substr(eq + 1));
    const FlagSpec* spec = FindFlag(key);
    if (spec == nullptr || key == "config") {
      throw UsageError(path.string() + ":" + std::to_string(line_number) +
                       ": unknown config key '" + key + "'");
    }
    if (spec->type == FlagType::kRepeated) {
      raw[key].push_back(value);
    } else {
      raw[key] = {value};
    }
  }
  return raw;
}

// Typed view over the merged settings.
class Settings {
 public:
  explicit Settings(RawSettings raw) : raw_(std::move(raw)) {}

  bool Has(const std::string& key) const { return raw_.count(key) > 0; }

  std::string String(const std::string& key, const std::string& fallback) const {
    const auto it = raw_.find(key);
    return it == raw_.end() || it->second.empty() ? fallback : it->second.back();
  }

  std::vector<std::string> List(const std::string& key) const {
    const auto it = raw_.find(key);
    return it == raw_.end() ? std::vector<std::string>{} : it->second;
  }

  double Real(const std::string& key, double fallback) const {
    if (!Has(key)) return fallback;
    const std::string text = String(key, "");
    const auto value = ParseReal(text);
    if (!value) throw UsageError("--" + key + ": '" + text + "' is not a number");
    return *value;
  }

  long long Integer(const std::string& key, long long fallback, long long min_value) const {
    if (!Has(key)) return fallback;
    const std::string text = String(key, "");
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw UsageError("--" + key + ": '" + text + "' is not an integer");
    }
    if (value < min_value) {
      throw UsageError("--" + key + " must be >= " + std::to_string(min_value));
    }
    return value;
  }

  bool Switch(const std::string& key) const {
    if (!Has(key)) return false;
    const std::string text = String(key, "true");
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw UsageError("--" + key + ": expected true or false, got '" + text + "'");
  }

 private:
  RawSettings raw_;
};

std::string FormatReal(double v, const char* format = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

fs::path OutDir(const Settings& s) {
  fs::path dir = s.String("out-dir", ".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

std::ofstream OpenOutput(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

std::uint64_t Seed(const Settings& s) {
  return static_cast<std::uint64_t>(s.Integer("seed", 0, 0));
}

TabularDataset LoadData(const Settings& s) {
  if (!s.Has("data")) throw UsageError("--data is required");
  return LoadCsv(s.String("data", ""), s.String("label", "fraud_reported"));
}

// ---------------------------------------------------------------------------
// Schedules

struct EpochSettings {
  int total = 100;
  int convex_cutoff = 10;
  int intermediate_cutoff = 50;
  double gamma = 4.0;
};

EpochSettings ReadEpochSettings(const Settings& s) {
  EpochSettings e;
  e.total = static_cast<int>(s.Integer("epochs", 100, 1));
  e.convex_cutoff = static_cast<int>(s.Integer("convex-epochs", std::max(1, e.total / 10), 1));
  e.intermediate_cutoff = static_cast<int>(
      s.Integer("intermediate-epochs", std::max(e.convex_cutoff + 1, e.total / 2), 1));
  e.gamma = s.Real("gamma", 4.0);
  if (!(e.gamma >= 0.0)) throw UsageError("--gamma must be >= 0");
  return e;
}

SchedulePlan CustomPlan(std::string name, const std::string& stage_list) {
  SchedulePlan plan;
  plan.name = std::move(name);
  std::stringstream ss(stage_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (!item.empty()) plan.stages.push_back(ParseStage(item));
  }
  plan.Validate();
  return plan;
}

SchedulePlan ResolveSchedule(const std::string& text, const EpochSettings& e) {
  const std::string spec = Trim(text);
  auto multistage = [&]() {
    return MultistagePlan(e.gamma, e.convex_cutoff, e.intermediate_cutoff, e.total);
  };
  if (spec == "multistage" || spec == "Multistage") return multistage();
  if (spec == "convex" || spec == "Convex(\xCE\xB3=0)") return ConvexPlan(0.0, e.total);
  if (spec == "nonconvex2" || spec == "Nonconvex(\xCE\xB3=2)") return NonconvexPlan(2.0, e.total);
  if (spec == "nonconvex4" || spec == "Nonconvex(\xCE\xB3=4)") return NonconvexPlan(4.0, e.total);

  const auto eq = spec.find('=');
  if (eq != std::string::npos) return CustomPlan(Trim(spec.substr(0, eq)), spec.substr(eq + 1));
  const auto colons = std::count(spec.begin(), spec.end(), ':');
  if (colons == 1) {
    const std::string kind = spec.substr(0, spec.find(':'));
    const auto value = ParseReal(spec.substr(spec.find(':') + 1));
    if (value && kind == "convex") return ConvexPlan(*value, e.total);
    if (value && kind == "nonconvex") return NonconvexPlan(*value, e.total);
  } else if (colons >= 2) {
    return CustomPlan("Custom", spec);
  }
  throw UsageError("unknown schedule '" + spec + "'");
}

std::vector<SchedulePlan> ResolveSchedules(const Settings& s,
                                           const std::vector<SchedulePlan>& fallback) {
  const EpochSettings e = ReadEpochSettings(s);
  std::vector<SchedulePlan> plans;
  for (const auto& spec : s.List("schedule")) plans.push_back(ResolveSchedule(spec, e));
  const auto stages = s.List("stage");
  if (!stages.empty()) {
    SchedulePlan plan;
    plan.name = "Custom";
    for (const auto& stage : stages) plan.stages.push_back(ParseStage(Trim(stage)));
    plan.Validate();
    plans.push_back(std::move(plan));
  }
  if (plans.empty()) plans = fallback;
  std::set<std::string> names;
  for (const auto& plan : plans) {
    if (!names.insert(plan.name).second) {
      throw UsageError("schedule name '" + plan.name + "' used twice");
    }
  }
  return plans;
}

TrainConfig ReadTrainConfig(const Settings& s) {
  TrainConfig config;
  config.learning_rate = s.Real("lr", 0.001);
  config.batch_size = static_cast<std::size_t>(s.Integer("batch", 32, 1));
  config.hidden_dim = static_cast<std::size_t>(s.Integer("hidden", 16, 1));
  config.seed = Seed(s);
  config.optimizer = ParseOptimizer(s.String("optimizer", "adam"));
  config.patience = static_cast<int>(s.Integer("patience", 0, 0));
  if (s.Has("alpha-pos") || s.Has("alpha-neg")) {
    config.alpha_mode = AlphaMode::kConstant;
    config.focal.alpha_pos = s.Real("alpha-pos", 1.0);
    config.focal.alpha_neg = s.Real("alpha-neg", 1.0);
  }
  return config;
}

ResampleOptions ReadResampleOptions(const Settings& s) {
  ResampleOptions options;
  options.strategy = ParseResampleStrategy(s.String("resample", "hybrid"));
  options.ratio = s.Real("ratio", 1.0);
  options.k_neighbors = static_cast<std::size_t>(s.Integer("k-neighbors", 5, 1));
  return options;
}

// Encodes the data and applies VIF pruning when requested.
EncodedMatrix PrepareMatrix(const Settings& s, const TabularDataset& ds, std::ostream& out) {
  EncodedMatrix matrix = Encode(ds);
  if (s.Switch("vif-prune")) {
    const PruneTrace trace = VifPrune(matrix, s.Real("vif-threshold", 10.0));
    out << "vif pruning removed " << trace.removed.size() << " of " << matrix.num_features()
        << " features\n";
    matrix = matrix.SelectColumns(trace.retained_columns);
  }
  return matrix;
}

// ---------------------------------------------------------------------------
// Commands

int RunAnalyze(const Settings& s, std::ostream& out, std::ostream& err) {
  const TabularDataset ds = LoadData(s);
  const fs::path dir = OutDir(s);
  const int jobs = static_cast<int>(s.Integer("jobs", 1, 1));

  std::size_t categorical = 0;
  for (ColumnKind kind : ds.column_kinds) categorical += kind != ColumnKind::kNumeric;
  if (categorical >= 1) {
    const ChiSquareMatrix chi = ComputeChiSquareMatrix(ds, jobs);
    auto file = OpenOutput(dir / "chi_square.csv");
    WriteChiSquareCsv(chi, file);
    out << "wrote " << (dir / "chi_square.csv").string() << " (" << chi.feature_names.size()
        << "x" << chi.feature_names.size() << ")\n";
  } else {
    err << "note: no categorical columns; chi-square matrix skipped\n";
  }

  const EncodedMatrix matrix = Encode(ds);
  auto file = OpenOutput(dir / "vif_trace.txt");
  if (matrix.num_features() >= 2) {
    const PruneTrace trace = VifPrune(matrix, s.Real("vif-threshold", 10.0));
    WritePruneTrace(trace, file);
    out << "wrote " << (dir / "vif_trace.txt").string() << " (" << trace.removed.size()
        << " removed, " << trace.retained.size() << " retained)\n";
  } else {
    PruneTrace trace;
    trace.threshold = s.Real("vif-threshold", 10.0);
    trace.retained = matrix.feature_names;
    WritePruneTrace(trace, file);
    err << "note: fewer than 2 features; VIF pruning skipped\n";
  }
  return kExitOk;
}

int RunTrain(const Settings& s, std::ostream& out, std::ostream&) {
  const TabularDataset ds = LoadData(s);
  const fs::path dir = OutDir(s);
  const EpochSettings epochs = ReadEpochSettings(s);
  const auto plans = ResolveSchedules(
      s, {MultistagePlan(epochs.gamma, epochs.convex_cutoff, epochs.intermediate_cutoff,
                         epochs.total)});
  if (plans.size() != 1) throw UsageError("train takes exactly one schedule");

  const EncodedMatrix matrix = PrepareMatrix(s, ds, out);
  TrainConfig config = ReadTrainConfig(s);
  config.schedule = plans.front();
  const EncodedMatrix resampled =
      Resample(matrix, ReadResampleOptions(s), config.seed ^ 0x5851F42D4C957F2DULL);
  const TrainResult result = Train(resampled, config);

  auto make_checkpoint = [&](const RecurrentModel& model, const std::string& note) {
    Checkpoint ckpt{model, matrix.feature_names, {}};
    ckpt.metadata["schedule"] = config.schedule.name;
    ckpt.metadata["stages"] = config.schedule.Describe();
    ckpt.metadata["label"] = ds.label_name;
    ckpt.metadata["seed"] = std::to_string(config.seed);
    ckpt.metadata["alpha_pos"] = FormatReal(result.focal.alpha_pos, "%.17g");
    ckpt.metadata["alpha_neg"] = FormatReal(result.focal.alpha_neg, "%.17g");
    ckpt.metadata["name"] = note;
    return ckpt;
  };

  for (std::size_t i = 0; i < result.checkpoints.size(); ++i) {
    const StageCheckpoint& sc = result.checkpoints[i];
    const std::string name = "stage" + std::to_string(i + 1) + " " + sc.stage.Label() +
                             " @epoch " + std::to_string(sc.epoch);
    const fs::path path = dir / ("model_stage" + std::to_string(i + 1) + ".ckpt");
    SaveCheckpoint(make_checkpoint(sc.model, name), path);
  }
  SaveCheckpoint(make_checkpoint(result.model, "final"), dir / "model.ckpt");
  {
    auto file = OpenOutput(dir / "epoch_log.csv");
    WriteEpochLogCsv(result.logs, file);
  }

  const EpochLog& last = result.logs.back();
  out << "schedule " << config.schedule.name << " [" << config.schedule.Describe() << "]\n"
      << "trained " << result.logs.size() << " epochs on " << resampled.num_rows()
      << " rows x " << resampled.num_features() << " features; final loss "
      << FormatReal(last.mean_loss) << ", train accuracy " << FormatReal(last.train_accuracy)
      << "\n"
      << "wrote model.ckpt, " << result.checkpoints.size()
      << " stage checkpoints and epoch_log.csv to " << dir.string() << "\n";
  return kExitOk;
}

int RunCompare(const Settings& s, std::ostream& out, std::ostream&) {
  const TabularDataset ds = LoadData(s);
  const fs::path dir = OutDir(s);
  const EpochSettings epochs = ReadEpochSettings(s);
  const auto plans = ResolveSchedules(
      s, DefaultSchedules(epochs.total, epochs.convex_cutoff, epochs.intermediate_cutoff,
                          epochs.gamma));

  const EncodedMatrix matrix = PrepareMatrix(s, ds, out);
  CompareConfig config;
  config.folds = static_cast<std::size_t>(s.Integer("folds", 10, 2));
  config.seed = Seed(s);
  config.train = ReadTrainConfig(s);
  config.resample = ReadResampleOptions(s);
  config.threshold = s.Real("threshold", 0.5);
  config.jobs = static_cast<int>(s.Integer("jobs", 1, 1));

  const MetricsTable table = CompareSchedules(matrix, plans, config);
  {
    auto file = OpenOutput(dir / "metrics.csv");
    WriteMetricsCsv(table, file);
  }
  for (const auto& sm : table.schedules) {
    auto file = OpenOutput(dir / ("roc_" + ScheduleSlug(sm.schedule) + ".csv"));
    WriteRocCsv(sm.pooled_roc, file);
  }

  out << "schedule,loss,accuracy,precision,recall,f1,auc (means over " << config.folds
      << " folds)\n";
  for (const auto& sm : table.schedules) {
    const FoldMetrics& m = sm.mean;
    out << sm.schedule << ',' << FormatReal(m.loss, "%.4f") << ','
        << FormatReal(m.accuracy, "%.4f") << ',' << FormatReal(m.precision, "%.4f") << ','
        << FormatReal(m.recall, "%.4f") << ',' << FormatReal(m.f1, "%.4f") << ','
        << FormatReal(m.auc, "%.4f") << '\n';
  }
  return kExitOk;
}

int RunExplain(const Settings& s, std::ostream& out, std::ostream&) {
  const TabularDataset ds = LoadData(s);
  const fs::path dir = OutDir(s);
  const EncodedMatrix matrix = Encode(ds);

  std::vector<std::pair<std::string, fs::path>> sources;
  for (const auto& spec : s.List("checkpoint")) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      sources.emplace_back("", spec);
    } else {
      sources.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
    }
  }
  if (sources.empty()) {
    for (int i = 1;; ++i) {
      const fs::path path = dir / ("model_stage" + std::to_string(i) + ".ckpt");
      if (!fs::exists(path)) break;
      sources.emplace_back("", path);
    }
    if (sources.empty() && fs::exists(dir / "model.ckpt")) sources.emplace_back("", dir / "model.ckpt");
    if (sources.empty()) {
      throw UsageError("no --checkpoint given and no model checkpoints in " + dir.string());
    }
  }

  std::vector<Checkpoint> checkpoints;
  std::vector<std::string> names;
  for (const auto& [name, path] : sources) {
    checkpoints.push_back(LoadCheckpoint(path));
    std::string display = name;
    if (display.empty()) {
      const auto it = checkpoints.back().metadata.find("name");
      display = it != checkpoints.back().metadata.end() && it->second != "final"
                    ? it->second
                    : path.stem().string();
    }
    names.push_back(display);
  }

  // Map checkpoint features onto encoded columns; all checkpoints must agree.
  const std::vector<std::string>& features = checkpoints.front().feature_names.empty()
                                                 ? matrix.feature_names
                                                 : checkpoints.front().feature_names;
  std::vector<std::size_t> columns;
  for (const auto& feature : features) {
    const auto it = std::find(matrix.feature_names.begin(), matrix.feature_names.end(), feature);
    if (it == matrix.feature_names.end()) {
      throw DataError("checkpoint feature '" + feature + "' is not a column of the data");
    }
    columns.push_back(static_cast<std::size_t>(it - matrix.feature_names.begin()));
  }
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const auto& own = checkpoints[c].feature_names.empty() ? matrix.feature_names
                                                           : checkpoints[c].feature_names;
    if (own != features) throw DataError("checkpoints were trained on different features");
    if (checkpoints[c].model.input_dim() * checkpoints[c].model.sequence_len() !=
        features.size()) {
      throw DataError("checkpoint '" + names[c] + "' does not match the feature count");
    }
  }
  const EncodedMatrix selected = matrix.SelectColumns(columns);

  const std::uint64_t seed = Seed(s);
  const RowMatrix background = SampleBackground(
      selected.values, static_cast<std::size_t>(s.Integer("background-size", 50, 1)), seed);
  const RowMatrix instances = SampleBackground(
      selected.values, static_cast<std::size_t>(s.Integer("instances", 20, 1)), seed + 1);

  ExplainOptions options;
  options.exact_limit = static_cast<std::size_t>(s.Integer("exact-limit", 12, 0));
  options.permutations = static_cast<std::size_t>(s.Integer("permutations", 256, 1));
  options.seed = seed;
  options.jobs = static_cast<int>(s.Integer("jobs", 1, 1));

  std::vector<NamedPredictor> models;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    models.push_back({names[c], MakePredictor(checkpoints[c].model)});
  }
  const ShapSummary summary =
      SummarizeShap(models, instances, background, options, selected.feature_names);

  {
    auto file = OpenOutput(dir / "shap_summary.csv");
    WriteShapSummaryCsv(summary, file);
  }
  {
    auto file = OpenOutput(dir / "shap_evenness.csv");
    WriteEvennessCsv(summary, file);
  }
  if (s.Switch("per-instance")) {
    auto file = OpenOutput(dir / "shap_instances.csv");
    WriteShapInstancesCsv(summary, file);
  }

  const bool exact = selected.num_features() <= options.exact_limit;
  out << "explained " << instances.rows() << " instances against " << background.rows()
      << " background rows ("
      << (exact ? std::string("exact")
                : "permutation, " + std::to_string(options.permutations) + " orderings")
      << ")\n";
  for (std::size_t m = 0; m < summary.model_names.size(); ++m) {
    out << summary.model_names[m] << ": base value "
        << FormatReal(summary.reports[m].base_value) << ", evenness "
        << FormatReal(summary.evenness[m]) << ", max efficiency gap "
        << FormatReal(summary.reports[m].MaxEfficiencyGap(), "%.3g") << '\n';
  }
  return kExitOk;
}

std::vector<std::vector<std::string>> ReadCsvFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return ParseCsv(in);
}

int RunReport(const Settings& s, std::ostream& out, std::ostream&) {
  const fs::path dir = s.String("out-dir", ".");
  std::ostringstream report;
  bool any = false;

  if (fs::exists(dir / "vif_trace.txt")) {
    any = true;
    report << "== Multicollinearity (VIF)\n";
    std::ifstream in(dir / "vif_trace.txt");
    std::string line;
    while (std::getline(in, line)) report << "  " << line << '\n';
    report << '\n';
  }
  if (fs::exists(dir / "chi_square.csv")) {
    any = true;
    const auto rows = ReadCsvFile(dir / "chi_square.csv");
    std::size_t significant = 0, pairs = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      for (std::size_t j = i + 1; j < rows[i].size(); ++j) {
        ++pairs;
        if (ParseReal(rows[i][j]).value_or(1.0) < 0.05) ++significant;
      }
    }
    report << "== Chi-square associations\n  " << (rows.empty() ? 0 : rows.size() - 1)
           << " categorical columns, " << significant << " of " << pairs
           << " pairs significant at p < 0.05\n\n";
  }
  if (fs::exists(dir / "epoch_log.csv")) {
    any = true;
    const auto rows = ReadCsvFile(dir / "epoch_log.csv");
    report << "== Training log\n";
    std::string previous;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() < 4) continue;
      if (rows[i][1] != previous) {
        report << "  epoch " << rows[i][0] << ": stage " << rows[i][1] << '\n';
        previous = rows[i][1];
      }
    }
    if (rows.size() > 1 && rows.back().size() >= 4) {
      report << "  final epoch " << rows.back()[0] << ": mean loss " << rows.back()[2]
             << ", train accuracy " << rows.back()[3] << '\n';
    }
    report << '\n';
  }
  if (fs::exists(dir / "metrics.csv")) {
    any = true;
    const auto rows = ReadCsvFile(dir / "metrics.csv");
    report << "== Cross-validated schedule comparison (fold means)\n";
    report << "  schedule | loss | accuracy | precision | recall | f1 | auc\n";
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() < 8 || rows[i][1] != "mean") continue;
      report << "  " << rows[i][0];
      for (std::size_t j = 2; j < 8; ++j) report << " | " << rows[i][j];
      report << '\n';
    }
    report << "  (loss uses each schedule's own final-stage loss; not comparable across rows)\n\n";
  }
  if (fs::exists(dir / "shap_summary.csv")) {
    any = true;
    const auto rows = ReadCsvFile(dir / "shap_summary.csv");
    report << "== SHAP mean |attribution|, top features\n";
    if (!rows.empty()) {
      for (std::size_t c = 2; c < rows[0].size(); ++c) {
        std::vector<std::pair<double, std::string>> ranked;
        for (std::size_t i = 1; i < rows.size(); ++i) {
          if (rows[i].size() > c) ranked.emplace_back(-ParseReal(rows[i][c]).value_or(0.0), rows[i][1]);
        }
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        report << "  " << rows[0][c] << ':';
        for (std::size_t r = 0; r < std::min<std::size_t>(5, ranked.size()); ++r) {
          report << ' ' << ranked[r].second << '=' << FormatReal(-ranked[r].first, "%.4g");
        }
        report << '\n';
      }
    }
    if (fs::exists(dir / "shap_evenness.csv")) {
      const auto even = ReadCsvFile(dir / "shap_evenness.csv");
      for (std::size_t i = 1; i < even.size(); ++i) {
        if (even[i].size() >= 2) report << "  evenness " << even[i][0] << ": " << even[i][1] << '\n';
      }
    }
    report << '\n';
  }
  if (!any) throw DataError("nothing to report in '" + dir.string() + "'");

  auto file = OpenOutput(dir / "report.txt");
  file << report.str();
  out << report.str();
  return kExitOk;
}

int RunSynth(const Settings& s, std::ostream& out, std::ostream&) {
  GaussianBenchmarkOptions options;
  options.rows = static_cast<std::size_t>(s.Integer("rows", 2000, 2));
  options.positive_rate = s.Real("positive-rate", 0.05);
  options.features = static_cast<std::size_t>(s.Integer("features", 4, 1));
  options.separation = s.Real("separation", 1.0);
  const EncodedMatrix matrix = MakeGaussianBenchmark(options, Seed(s));

  TabularDataset ds;
  ds.column_names = matrix.feature_names;
  ds.column_kinds.assign(matrix.num_features(), ColumnKind::kNumeric);
  ds.label_name = "label";
  ds.negative_label = "0";
  ds.positive_label = "1";
  ds.labels = matrix.labels;
  for (std::size_t i = 0; i < matrix.num_rows(); ++i) {
    std::vector<std::string> row;
    for (std::size_t j = 0; j < matrix.num_features(); ++j) {
      row.push_back(FormatReal(matrix.values(static_cast<Eigen::Index>(i),
                                             static_cast<Eigen::Index>(j)),
                               "%.10f"));
    }
    ds.rows.push_back(std::move(row));
  }
  const fs::path path = OutDir(s) / "synthetic.csv";
  WriteCsv(ds, path);
  out << "wrote " << path.string() << " (" << options.rows << " rows, "
      << matrix.CountLabel(1) << " positive)\n";
  return kExitOk;
}

int Dispatch(const std::string& command, const Settings& s, std::ostream& out,
             std::ostream& err) {
  if (command == "analyze") return RunAnalyze(s, out, err);
  if (command == "train") return RunTrain(s, out, err);
  if (command == "compare") return RunCompare(s, out, err);
  if (command == "explain") return RunExplain(s, out, err);
  if (command == "report") return RunReport(s, out, err);
  if (command == "synth") return RunSynth(s, out, err);
  throw UsageError("unknown command '" + command + "'");
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"focalstage: staged focal-loss training, evaluation and SHAP explanation"};
  app.require_subcommand(1);

  // Storage for every subcommand's flags.
  std::map<std::string, RawSettings> given;
  std::map<std::string, std::map<std::string, bool>> switches;
  std::map<std::string, CLI::App*> subcommands;
  for (const auto& command : Commands()) {
    CLI::App* sub = app.add_subcommand(command.name, command.help);
    subcommands[command.name] = sub;
    for (const auto& name : command.flags) {
      const FlagSpec* spec = FindFlag(name);
      const std::string flag = "--" + name;
      switch (spec->type) {
        case FlagType::kValue:
          given[command.name][name].resize(1);
          sub->add_option(flag, given[command.name][name].front(), spec->help);
          break;
        case FlagType::kRepeated:
          sub->add_option(flag, given[command.name][name], spec->help)->take_all();
          break;
        case FlagType::kSwitch:
          sub->add_flag(flag, switches[command.name][name], spec->help);
          break;
      }
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand help requests surface as CallForHelp on the subcommand.
    if (e.get_exit_code() == 0) {
      for (const auto& [name, sub] : subcommands) {
        if (sub->parsed()) {
          out << sub->help();
          return kExitOk;
        }
      }
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  std::string command;
  for (const auto& [name, sub] : subcommands) {
    if (sub->parsed()) command = name;
  }
  CLI::App* sub = subcommands[command];

  try {
    RawSettings merged;
    const auto config_opt = sub->get_option_no_throw("--config");
    if (config_opt != nullptr && config_opt->count() > 0) {
      merged = ReadConfigFile(given[command]["config"].front());
    }
    for (auto& [name, values] : given[command]) {
      const auto* opt = sub->get_option("--" + name);
      if (opt->count() == 0 || name == "config") continue;
      merged[name] = values;
    }
    for (const auto& [name, value] : switches[command]) {
      if (sub->get_option("--" + name)->count() > 0) merged[name] = {value ? "true" : "false"};
    }
    return Dispatch(command, Settings(std::move(merged)), out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }
}

}  // namespace focalstage::cli
