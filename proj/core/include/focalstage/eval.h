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

#ifndef FOCALSTAGE_EVAL_H_
#define FOCALSTAGE_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "focalstage/dataio.h"
#include "focalstage/loss.h"
#include "focalstage/resample.h"
#include "focalstage/train.h"

namespace focalstage {

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
};

// Each class is shuffled by `seed` and dealt round-robin over the k folds, so
// every fold's positive count is floor or ceil of P/k. Negatives continue
// the deal where positives stopped, which also balances fold sizes.
// Indices inside each fold are sorted. Throws InvalidArgument if either
// class has fewer than k rows.
std::vector<Fold> StratifiedKFold(const std::vector<int>& labels, std::size_t k,
                                  std::uint64_t seed);

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionCounts counts;
};

// Prediction is positive iff prob >= threshold. Undefined precision,
// recall or F1 (zero denominator) is reported as 0.
ClassificationMetrics ComputeClassificationMetrics(const std::vector<double>& probs,
                                                   const std::vector<int>& labels,
                                                   double threshold = 0.5);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  double auc = 0.5;
  // Starts at (0, 0), ends at (1, 1); one point per distinct score.
  std::vector<RocPoint> points;
};

// Threshold sweep over distinct scores from high to low; AUC by the
// trapezoid rule over the resulting curve. Throws InvalidArgument unless
// both classes are present.
RocResult ComputeRocAuc(const std::vector<double>& probs, const std::vector<int>& labels);

struct FoldMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
};

struct ScheduleMetrics {
  std::string schedule;
  std::vector<FoldMetrics> folds;
  FoldMetrics mean;
  // ROC of the out-of-fold predictions pooled over all folds.
  RocResult pooled_roc;
};

struct MetricsTable {
  std::vector<ScheduleMetrics> schedules;
};

FoldMetrics MeanOf(const std::vector<FoldMetrics>& folds);

struct CompareConfig {
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  // Template for every run; schedule and seed are replaced per run.
  TrainConfig train;
  ResampleOptions resample;
  double threshold = 0.5;
  int jobs = 1;
};

// For every schedule and fold: resample the training split, train, and score
// the untouched validation split. The loss column is the mean validation
// loss under that schedule's final-stage loss. Results are ordered by
// (schedule, fold) regardless of `jobs`.
MetricsTable CompareSchedules(const EncodedMatrix& matrix,
                              const std::vector<SchedulePlan>& schedules,
                              const CompareConfig& config);

// The four schedules of the standard comparison, in report order:
// Convex(γ=0), Multistage, Nonconvex(γ=2), Nonconvex(γ=4).
std::vector<SchedulePlan> DefaultSchedules(int total_epochs = 100, int convex_cutoff = 10,
                                           int intermediate_cutoff = 50,
                                           double final_gamma = 4.0);

// schedule,fold,loss,accuracy,precision,recall,f1,auc with fold = "mean" on
// the aggregate row of each schedule.
void WriteMetricsCsv(const MetricsTable& table, std::ostream& out);
// fpr,tpr
void WriteRocCsv(const RocResult& roc, std::ostream& out);

// File-name-safe form of a schedule name: "Convex(γ=0)" -> "convex_g0".
std::string ScheduleSlug(const std::string& name);

struct GaussianBenchmarkOptions {
  std::size_t rows = 2000;
  double positive_rate = 0.05;
  std::size_t features = 4;
  // Distance between the class means along every axis, in units of the
  // (shared, unit) standard deviation.
  double separation = 1.0;
};

// Two overlapping isotropic Gaussians, min-max scaled. Exactly
// round(rows * positive_rate) rows are positive; row order is shuffled.
EncodedMatrix MakeGaussianBenchmark(const GaussianBenchmarkOptions& options,
                                    std::uint64_t seed);

}  // namespace focalstage

#endif  // FOCALSTAGE_EVAL_H_
