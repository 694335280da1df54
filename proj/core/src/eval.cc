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

#include "focalstage/eval.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "focalstage/parallel.h"
#include "focalstage/rng.h"

namespace focalstage {

std::vector<Fold> StratifiedKFold(const std::vector<int>& labels, std::size_t k,
                                  std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("k-fold needs k >= 2");
  std::vector<std::size_t> positives, negatives;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == 1 ? positives : negatives).push_back(i);
  }
  if (positives.size() < k || negatives.size() < k) {
    throw InvalidArgument("stratified " + std::to_string(k) + "-fold needs at least " +
                          std::to_string(k) + " rows of each class (have " +
                          std::to_string(positives.size()) + " positive, " +
                          std::to_string(negatives.size()) + " negative)");
  }
  Rng rng(seed);
  rng.Shuffle(positives);
  rng.Shuffle(negatives);

  std::vector<std::size_t> fold_of(labels.size());
  for (std::size_t i = 0; i < positives.size(); ++i) fold_of[positives[i]] = i % k;
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    fold_of[negatives[i]] = (positives.size() + i) % k;
  }

  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      (fold_of[i] == f ? folds[f].valid : folds[f].train).push_back(i);
    }
  }
  return folds;
}

ClassificationMetrics ComputeClassificationMetrics(const std::vector<double>& probs,
                                                   const std::vector<int>& labels,
                                                   double threshold) {
  if (probs.size() != labels.size()) throw InvalidArgument("probability/label size mismatch");
  ClassificationMetrics m;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool predicted = probs[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++m.counts.tp;
    if (predicted && !actual) ++m.counts.fp;
    if (!predicted && actual) ++m.counts.fn;
    if (!predicted && !actual) ++m.counts.tn;
  }
  const auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  m.accuracy = ratio(m.counts.tp + m.counts.tn, probs.size());
  m.precision = ratio(m.counts.tp, m.counts.tp + m.counts.fp);
  m.recall = ratio(m.counts.tp, m.counts.tp + m.counts.fn);
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

RocResult ComputeRocAuc(const std::vector<double>& probs, const std::vector<int>& labels) {
  if (probs.size() != labels.size()) throw InvalidArgument("probability/label size mismatch");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw InvalidArgument("ROC/AUC needs both classes present");
  }

  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

  RocResult roc;
  roc.points.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  double area = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double score = probs[order[i]];
    std::size_t j = i;
    for (; j < order.size() && probs[order[j]] == score; ++j) {
      (labels[order[j]] == 1 ? tp : fp) += 1;
    }
    const RocPoint next{static_cast<double>(fp) / static_cast<double>(negatives),
                        static_cast<double>(tp) / static_cast<double>(positives)};
    const RocPoint& prev = roc.points.back();
    area += (next.fpr - prev.fpr) * (next.tpr + prev.tpr) * 0.5;
    roc.points.push_back(next);
    i = j;
  }
  roc.auc = area;
  return roc;
}

FoldMetrics MeanOf(const std::vector<FoldMetrics>& folds) {
  FoldMetrics mean;
  if (folds.empty()) return mean;
  for (const auto& f : folds) {
    mean.loss += f.loss;
    mean.accuracy += f.accuracy;
    mean.precision += f.precision;
    mean.recall += f.recall;
    mean.f1 += f.f1;
    mean.auc += f.auc;
  }
  const double n = static_cast<double>(folds.size());
  mean.loss /= n;
  mean.accuracy /= n;
  mean.precision /= n;
  mean.recall /= n;
  mean.f1 /= n;
  mean.auc /= n;
  return mean;
}

MetricsTable CompareSchedules(const EncodedMatrix& matrix,
                              const std::vector<SchedulePlan>& schedules,
                              const CompareConfig& config) {
  if (schedules.empty()) throw InvalidArgument("compare needs at least one schedule");
  for (const auto& plan : schedules) plan.Validate();
  const std::vector<Fold> folds = StratifiedKFold(matrix.labels, config.folds, config.seed);
  const std::size_t k = folds.size();

  struct RunOutput {
    FoldMetrics metrics;
    std::vector<double> probs;
  };
  std::vector<RunOutput> runs(schedules.size() * k);

  ParallelFor(runs.size(), config.jobs, [&](std::size_t task) {
    const std::size_t s = task / k;
    const std::size_t f = task % k;
    const std::uint64_t run_seed = DeriveSeed(config.seed, f, s);

    const EncodedMatrix train_split = matrix.SelectRows(folds[f].train);
    const EncodedMatrix valid_split = matrix.SelectRows(folds[f].valid);
    const EncodedMatrix resampled =
        Resample(train_split, config.resample, run_seed ^ 0x5851F42D4C957F2DULL);

    TrainConfig train_config = config.train;
    train_config.schedule = schedules[s];
    train_config.seed = run_seed;
    const TrainResult trained = Train(resampled, train_config);

    RunOutput& out = runs[task];
    out.probs = PredictAll(trained.model, valid_split.values);
    const auto cls =
        ComputeClassificationMetrics(out.probs, valid_split.labels, config.threshold);
    out.metrics.loss =
        MeanLoss(out.probs, valid_split.labels, trained.focal, schedules[s].final_stage());
    out.metrics.accuracy = cls.accuracy;
    out.metrics.precision = cls.precision;
    out.metrics.recall = cls.recall;
    out.metrics.f1 = cls.f1;
    out.metrics.auc = ComputeRocAuc(out.probs, valid_split.labels).auc;
  });

  MetricsTable table;
  for (std::size_t s = 0; s < schedules.size(); ++s) {
    ScheduleMetrics sm;
    sm.schedule = schedules[s].name;
    std::vector<double> pooled_probs(matrix.num_rows());
    for (std::size_t f = 0; f < k; ++f) {
      const RunOutput& run = runs[s * k + f];
      sm.folds.push_back(run.metrics);
      for (std::size_t i = 0; i < folds[f].valid.size(); ++i) {
        pooled_probs[folds[f].valid[i]] = run.probs[i];
      }
    }
    sm.mean = MeanOf(sm.folds);
    sm.pooled_roc = ComputeRocAuc(pooled_probs, matrix.labels);
    table.schedules.push_back(std::move(sm));
  }
  return table;
}

std::vector<SchedulePlan> DefaultSchedules(int total_epochs, int convex_cutoff,
                                           int intermediate_cutoff, double final_gamma) {
  return {
      ConvexPlan(0.0, total_epochs),
      MultistagePlan(final_gamma, convex_cutoff, intermediate_cutoff, total_epochs),
      NonconvexPlan(final_gamma / 2.0, total_epochs),
      NonconvexPlan(final_gamma, total_epochs),
  };
}

namespace {
void WriteMetricsRow(std::ostream& out, const std::string& schedule, const std::string& fold,
                     const FoldMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), ",%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", fold.c_str(), m.loss,
                m.accuracy, m.precision, m.recall, m.f1, m.auc);
  out << schedule << buf;
}
}  // namespace

void WriteMetricsCsv(const MetricsTable& table, std::ostream& out) {
  out << "schedule,fold,loss,accuracy,precision,recall,f1,auc\n";
  for (const auto& sm : table.schedules) {
    for (std::size_t f = 0; f < sm.folds.size(); ++f) {
      WriteMetricsRow(out, sm.schedule, std::to_string(f + 1), sm.folds[f]);
    }
    WriteMetricsRow(out, sm.schedule, "mean", sm.mean);
  }
}

void WriteRocCsv(const RocResult& roc, std::ostream& out) {
  out << "fpr,tpr\n";
  char buf[64];
  for (const auto& p : roc.points) {
    std::snprintf(buf, sizeof(buf), "%.8f,%.8f\n", p.fpr, p.tpr);
    out << buf;
  }
}

std::string ScheduleSlug(const std::string& name) {
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(name[i]);
    if (c == 0xCE && i + 1 < name.size() && static_cast<unsigned char>(name[i + 1]) == 0xB3) {
      // UTF-8 gamma
      if (!out.empty() && out.back() != '_') out.push_back('_');
      out.push_back('g');
      ++i;
    } else if (c == '=') {
      continue;
    } else if (std::isalnum(c)) {
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '.') {
      out.push_back('p');
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  std::string cleaned;
  for (char c : out) {
    if (c == '_' && !cleaned.empty() && cleaned.back() == '_') continue;
    cleaned.push_back(c);
  }
  while (!cleaned.empty() && cleaned.back() == '_') cleaned.pop_back();
  return cleaned.empty() ? "schedule" : cleaned;
}

EncodedMatrix MakeGaussianBenchmark(const GaussianBenchmarkOptions& options,
                                    std::uint64_t seed) {
  if (options.rows < 2 || options.features == 0) {
    throw InvalidArgument("benchmark needs at least 2 rows and 1 feature");
  }
  if (!(options.positive_rate > 0.0 && options.positive_rate < 1.0)) {
    throw InvalidArgument("positive rate must lie in (0, 1)");
  }
  const auto positives = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(options.rows) *
                                            options.positive_rate)),
      1, options.rows - 1);

  Rng rng(seed);
  std::vector<int> labels(options.rows, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(positives), 1);
  rng.Shuffle(labels);

  RowMatrix raw(static_cast<Eigen::Index>(options.rows),
                static_cast<Eigen::Index>(options.features));
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    const double shift = labels[static_cast<std::size_t>(i)] == 1 ? options.separation : 0.0;
    for (Eigen::Index j = 0; j < raw.cols(); ++j) raw(i, j) = rng.Normal() + shift;
  }
  return FromNumeric(raw, std::move(labels));
}

}  // namespace focalstage
