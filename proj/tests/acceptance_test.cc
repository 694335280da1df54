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

// Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "cli.h"
#include "focalstage/eval.h"
#include "focalstage/explain.h"
#include "focalstage/loss.h"
#include "focalstage/model.h"
#include "focalstage/resample.h"
#include "focalstage/stats.h"
#include "focalstage/train.h"
#include "test_support.h"

namespace focalstage {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

RowMatrix UniformRows(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = unit(gen);
  }
  return m;
}

std::vector<double> RowOf(const RowMatrix& m, Eigen::Index i) {
  return {m.row(i).begin(), m.row(i).end()};
}

// 1. Analytic parameter gradients of every stage loss through the LSTM.
Outcome GradientCorrectness() {
  const auto start = Clock::now();
  const Stage stages[] = {{StageKind::kConvex, 0.0, 1, 1},
                          {StageKind::kPower, 2.0, 1, 1},
                          {StageKind::kPower, 4.0, 1, 1}};
  FocalParams params;
  params.alpha_pos = 1.8;
  params.alpha_neg = 0.2;
  std::mt19937_64 gen(101);
  double worst = 0.0;
  std::size_t checked = 0;
  for (const Stage& stage : stages) {
    for (int sample = 0; sample < 4; ++sample) {
      const RecurrentModel model = RecurrentModel::Init(4, 8, 2, 200 + sample);
      std::vector<double> x(8);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (double& v : x) v = unit(gen);
      const int y = sample % 2;
      const auto trace = model.Forward(x);
      const auto grad = model.Backward(trace, LossGrad(trace.probability, y, params, stage));
      for (int k = 0; k < 20; ++k) {
        const std::size_t index = gen() % model.num_parameters();
        const double numeric =
            testing::FiniteDifference(model, x, y, params, stage, index, 1e-5);
        worst = std::max(worst, testing::RelativeError(grad[index], numeric));
        ++checked;
      }
    }
  }
  const double elapsed = Seconds(start);
  return {worst < 1e-5 && elapsed < 30.0 && checked >= 150,
          Fmt("max rel err %.2e over %.0f params x 3 stages, %.2fs", worst,
              static_cast<double>(checked / 3), elapsed)};
}

// 2. Convex-stage curvature equals gamma/p + 1/p^2 and is positive.
Outcome Convexity() {
  std::mt19937_64 gen(102);
  std::uniform_real_distribution<double> prob(1e-4, 1.0 - 1e-4);
  std::uniform_real_distribution<double> gamma_dist(0.0, 1.0);
  double worst = 0.0;
  bool positive = true;
  for (int i = 0; i < 1000; ++i) {
    const double p = prob(gen);
    const double gamma = 1.0 - gamma_dist(gen);  // (0, 1]
    FocalParams params;
    params.gamma = gamma;
    const double h = 1e-3 * std::min(p, 1.0 - p);
    const double second = (ConvexLoss(p + h, 1, params) - 2.0 * ConvexLoss(p, 1, params) +
                           ConvexLoss(p - h, 1, params)) /
                          (h * h);
    const double analytic = gamma / p + 1.0 / (p * p);
    positive = positive && second > 0.0 && ConvexSecondDerivative(p, gamma) > 0.0;
    worst = std::max(worst, std::abs(second - analytic) / analytic);
    worst = std::max(worst, std::abs(ConvexSecondDerivative(p, gamma) - analytic) / analytic);
  }
  return {positive && worst < 1e-4,
          std::string("1000 points, all positive=") + (positive ? "yes" : "no") +
              Fmt(", max rel err %.2e", worst)};
}

// 3. convex(0) == power(0) == weighted cross-entropy.
Outcome ReductionIdentity() {
  std::mt19937_64 gen(103);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    FocalParams params;
    params.alpha_pos = 2.0 * unit(gen);
    params.alpha_neg = 2.0 * unit(gen);
    const double p = unit(gen);
    const int y = static_cast<int>(gen() % 2);
    const double ce = WeightedCrossEntropy(p, y, params);
    worst = std::max({worst, std::abs(ConvexLoss(p, y, params) - ce),
                      std::abs(PowerLoss(p, y, params, 0.0) - ce)});
  }
  return {worst <= 1e-12, Fmt("1000 points, max abs diff %.2e", worst)};
}

// 4. Default schedule: 10 convex, 40 power(2), 50 power(4).
Outcome ScheduleFidelity() {
  GaussianBenchmarkOptions options;
  options.rows = 64;
  options.positive_rate = 0.25;
  const EncodedMatrix data = MakeGaussianBenchmark(options, 104);
  const TrainResult result = Train(data, TrainConfig{});
  std::vector<std::pair<std::string, int>> runs;
  for (const EpochLog& log : result.logs) {
    if (runs.empty() || runs.back().first != log.stage.Label()) {
      runs.emplace_back(log.stage.Label(), 0);
    }
    ++runs.back().second;
  }
  const std::vector<std::pair<std::string, int>> expected = {
      {"convex(0)", 10}, {"power(2)", 40}, {"power(4)", 50}};
  std::string seen;
  for (const auto& [label, count] : runs) {
    seen += (seen.empty() ? "" : ", ") + std::to_string(count) + "x" + label;
  }
  return {runs == expected, seen};
}

// 5. Efficiency on a random 8-feature model; dummy and symmetry axioms.
Outcome ShapleyAxioms() {
  const RecurrentModel model = RecurrentModel::Init(8, 16, 1, 105);
  const Predictor f = MakePredictor(model);
  const RowMatrix background = UniformRows(20, 8, 106);
  const RowMatrix instances = UniformRows(50, 8, 107);
  double gap = 0.0;
  for (Eigen::Index i = 0; i < instances.rows(); ++i) {
    gap = std::max(gap, ExactShapley(f, RowOf(instances, i), background).MaxEfficiencyGap());
  }

  RecurrentModel dummy_model = model;
  for (Gate g : {Gate::kInput, Gate::kForget, Gate::kOutput, Gate::kCandidate}) {
    dummy_model.GateWeights(g).col(5).setZero();
  }
  const Predictor dummy_f = MakePredictor(dummy_model);
  bool dummy = true;
  for (Eigen::Index i = 0; i < 10; ++i) {
    dummy = dummy && ExactShapley(dummy_f, RowOf(instances, i), background).attributions[0][5] == 0.0;
  }

  // Features 3 and 4 enter only through their sum.
  const Predictor symmetric = [&model](std::span<const double> v) {
    std::vector<double> z(v.begin(), v.end());
    const double s = v[3] + v[4];
    z[3] = s;
    z[4] = s;
    return model.Predict(z);
  };
  RowMatrix sym_background = background;
  sym_background.col(4) = sym_background.col(3);
  bool symmetry = true;
  for (Eigen::Index i = 0; i < 10; ++i) {
    std::vector<double> x = RowOf(instances, i);
    x[4] = x[3];
    const auto phi = ExactShapley(symmetric, x, sym_background).attributions[0];
    symmetry = symmetry && phi[3] == phi[4];
  }
  return {gap < 1e-9 && dummy && symmetry,
          Fmt("max efficiency gap %.2e over 50 instances", gap) + ", dummy exact=" +
              (dummy ? "yes" : "no") + ", symmetry exact=" + (symmetry ? "yes" : "no")};
}

// 6. Linear closed form phi_i = w_i (x_i - mean_bg,i).
Outcome LinearClosedForm() {
  std::mt19937_64 gen(108);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(trial % 9);
    std::vector<double> w(d);
    for (double& v : w) v = normal(gen);
    const double b = normal(gen);
    const Predictor f = [&w, b](std::span<const double> x) {
      double s = b;
      for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
      return s;
    };
    const auto cols = static_cast<Eigen::Index>(d);
    const RowMatrix background = UniformRows(25, cols, 300 + trial);
    const Eigen::RowVectorXd mean = background.colwise().mean();
    const std::vector<double> x = RowOf(UniformRows(1, cols, 400 + trial), 0);
    const auto phi = ExactShapley(f, x, background).attributions[0];
    for (std::size_t i = 0; i < d; ++i) {
      worst = std::max(worst, std::abs(phi[i] - w[i] * (x[i] - mean(static_cast<Eigen::Index>(i)))));
    }
  }
  return {worst < 1e-9, Fmt("20 models (d=2..10), max abs err %.2e", worst)};
}

// 7. Permutation estimator converges to exact values.
Outcome SamplingConvergence() {
  const RecurrentModel model = RecurrentModel::Init(10, 16, 1, 109);
  const Predictor f = MakePredictor(model);
  const RowMatrix background = UniformRows(20, 10, 110);
  const RowMatrix instances = UniformRows(3, 10, 111);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < instances.rows(); ++i) {
    const std::vector<double> x = RowOf(instances, i);
    const auto exact = ExactShapley(f, x, background).attributions[0];
    const auto approx = PermutationShapley(f, x, background, 20000, 112 + i).attributions[0];
    for (std::size_t j = 0; j < 10; ++j) worst = std::max(worst, std::abs(exact[j] - approx[j]));
  }
  return {worst < 0.01, Fmt("d=10, 3 instances, 20000 permutations, max abs err %.2e", worst)};
}

// 8. Trapezoid AUC equals Mann-Whitney pair counting.
Outcome AucOracle() {
  std::mt19937_64 gen(113);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 20 + gen() % 200;
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(gen() % 30) / 30.0;
      labels[i] = gen() % 3 == 0 ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    worst = std::max(worst, std::abs(ComputeRocAuc(scores, labels).auc -
                                     testing::MannWhitneyAuc(scores, labels)));
  }
  return {worst <= 1e-12, Fmt("100 score vectors with ties, max abs diff %.2e", worst)};
}

// 9. Chi-square critical values.
Outcome ChiSquareCriticalValues() {
  const double p1 = ChiSquareSurvival(3.841459, 1.0);
  const double p4 = ChiSquareSurvival(9.487729, 4.0);
  const double ref1 = boost::math::cdf(boost::math::complement(boost::math::chi_squared(1.0), 3.841459));
  const double ref4 = boost::math::cdf(boost::math::complement(boost::math::chi_squared(4.0), 9.487729));
  const bool pass = std::abs(p1 - 0.05) < 1e-3 && std::abs(p4 - 0.05) < 1e-3 &&
                    std::abs(p1 - ref1) < 1e-12 && std::abs(p4 - ref4) < 1e-12;
  return {pass, Fmt("p(3.841459, df1)=%.6f, p(9.487729, df4)=%.6f", p1, p4)};
}

// 10. VIF pruning of a collinear trio; orthogonal design gives VIF 1.
Outcome VifPruning() {
  std::mt19937_64 gen(114);
  std::normal_distribution<double> normal;
  RowMatrix raw(300, 5);
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    raw(i, 0) = normal(gen);
    raw(i, 1) = normal(gen);
    raw(i, 2) = raw(i, 0) + raw(i, 1) + 1e-6 * normal(gen);
    raw(i, 3) = normal(gen);
    raw(i, 4) = normal(gen);
  }
  const EncodedMatrix m = FromNumeric(raw, std::vector<int>(300, 0));
  const PruneTrace trace = VifPrune(m, 10.0);
  bool trio = trace.removed.size() == 1;
  if (trio) {
    const std::string& name = trace.removed[0].feature_name;
    trio = name == "x0" || name == "x1" || name == "x2";
  }
  RowMatrix kept(raw.rows(), static_cast<Eigen::Index>(trace.retained_columns.size()));
  for (std::size_t k = 0; k < trace.retained_columns.size(); ++k) {
    kept.col(static_cast<Eigen::Index>(k)) = m.values.col(static_cast<Eigen::Index>(trace.retained_columns[k]));
  }
  double max_retained = 0.0;
  for (double v : ComputeVif(kept)) max_retained = std::max(max_retained, v);

  RowMatrix orthogonal(16, 4);
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 4; ++j) orthogonal(i, j) = (i >> j) & 1 ? -1.0 : 1.0;
  }
  double orth_err = 0.0;
  for (double v : ComputeVif(orthogonal)) orth_err = std::max(orth_err, std::abs(v - 1.0));
  const double r2 = testing::OlsRSquared(raw, 2);
  return {trio && max_retained <= 10.0 && orth_err <= 1e-9 && r2 > 0.999,
          "removed " + (trace.removed.empty() ? std::string("nothing")
                                              : trace.removed[0].feature_name) +
              Fmt(", max retained VIF %.4f, orthogonal |VIF-1| %.1e, oracle R^2 %.9f",
                  max_retained, orth_err, r2)};
}

// 11. Every SMOTE row lies on a segment to one of its k nearest minority
// neighbours.
Outcome SmoteGeometry() {
  std::mt19937_64 gen(115);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RowMatrix raw(110, 3);
  std::vector<int> labels(110, 0);
  for (Eigen::Index i = 0; i < 110; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) raw(i, j) = unit(gen);
    if (i >= 100) labels[static_cast<std::size_t>(i)] = 1;
  }
  EncodedMatrix m = FromNumeric(raw, labels);
  const std::size_t k = 5;
  const EncodedMatrix out = Smote(m, k, 1.0, 116);
  std::vector<std::size_t> minority;
  for (std::size_t i = 100; i < 110; ++i) minority.push_back(i);
  std::size_t on_segment = 0;
  const std::size_t synthetic = out.num_rows() - m.num_rows();
  for (Eigen::Index s = static_cast<Eigen::Index>(m.num_rows()); s < out.values.rows(); ++s) {
    const Eigen::RowVectorXd p = out.values.row(s);
    bool found = false;
    for (std::size_t i : minority) {
      const Eigen::RowVectorXd a = m.values.row(static_cast<Eigen::Index>(i));
      for (std::size_t j : testing::BruteForceKnn(m.values, i, minority, k)) {
        const Eigen::RowVectorXd b = m.values.row(static_cast<Eigen::Index>(j));
        const double t = (p - a).dot(b - a) / (b - a).squaredNorm();
        if (t >= -1e-12 && t <= 1.0 + 1e-12 && (a + t * (b - a) - p).norm() < 1e-12) found = true;
      }
    }
    on_segment += found;
  }
  return {synthetic == 90 && on_segment == synthetic && out.CountLabel(1) == 100,
          std::to_string(on_segment) + "/" + std::to_string(synthetic) +
              " synthetic rows on a k-NN segment (k=5)"};
}

// 12. Stratified folds hold floor/ceil of the positive share.
Outcome Stratification() {
  std::mt19937_64 gen(117);
  std::size_t vectors = 0;
  double worst = 0.0;
  while (vectors < 100) {
    const std::size_t n = 30 + gen() % 500;
    const double rate = 0.05 + 0.4 * static_cast<double>(gen() % 1000) / 1000.0;
    std::vector<int> labels(n);
    std::size_t positives = 0;
    for (int& y : labels) {
      y = static_cast<double>(gen() % 10000) / 10000.0 < rate ? 1 : 0;
      positives += y;
    }
    const std::size_t k = 2 + gen() % 9;
    if (positives < k || n - positives < k) continue;
    ++vectors;
    for (const Fold& fold : StratifiedKFold(labels, k, gen())) {
      std::size_t p = 0;
      for (std::size_t i : fold.valid) p += labels[i];
      worst = std::max(worst, std::abs(static_cast<double>(p) -
                                       static_cast<double>(positives) / static_cast<double>(k)));
    }
  }
  return {worst <= 1.0, Fmt("100 label vectors, max |fold positives - P/k| = %.3f", worst)};
}

// 13. Multistage vs fixed gamma=2 on the imbalanced two-Gaussian benchmark.
Outcome DirectionalReplication() {
  const auto start = Clock::now();
  const int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  double ms_recall = 0.0, ms_f1 = 0.0, nc_recall = 0.0, nc_f1 = 0.0;
  std::string per_seed;
  constexpr int kSeeds = 5;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const EncodedMatrix data = MakeGaussianBenchmark(GaussianBenchmarkOptions{}, seed);
    CompareConfig config;
    config.seed = static_cast<std::uint64_t>(seed);
    config.jobs = jobs;
    config.train.hidden_dim = 16;
    const MetricsTable table =
        CompareSchedules(data, {MultistagePlan(), NonconvexPlan(2.0)}, config);
    const FoldMetrics& ms = table.schedules[0].mean;
    const FoldMetrics& nc = table.schedules[1].mean;
    ms_recall += ms.recall / kSeeds;
    ms_f1 += ms.f1 / kSeeds;
    nc_recall += nc.recall / kSeeds;
    nc_f1 += nc.f1 / kSeeds;
    per_seed += Fmt(" [seed %.0f: %.3f/%.3f", seed, ms.recall, ms.f1) +
                Fmt(" vs %.3f/%.3f]", nc.recall, nc.f1);
  }
  const double elapsed = Seconds(start);
  return {ms_recall >= nc_recall && ms_f1 >= nc_f1 && elapsed < 300.0,
          Fmt("mean recall %.4f vs %.4f, mean F1 %.4f vs %.4f", ms_recall, nc_recall, ms_f1, nc_f1) +
              Fmt(" (Multistage vs Nonconvex(g=2), 5 seeds, h=16), %.1fs;", elapsed) + per_seed};
}

// 14. Two compare runs with the same seed write byte-identical files.
Outcome Determinism() {
  testing::TempDir dir("acceptance_det");
  std::ostringstream sink;
  const std::string root = dir.path().string();
  int code = cli::Run({"focalstage", "synth", "--rows", "300", "--positive-rate", "0.1",
                       "--seed", "118", "--out-dir", root},
                      sink, sink);
  const std::string data = (dir.path() / "synthetic.csv").string();
  auto compare = [&](const std::string& out, const std::string& jobs) {
    return cli::Run({"focalstage", "compare", "--data", data, "--label", "label", "--epochs",
                     "20", "--folds", "5", "--seed", "7", "--jobs", jobs, "--out-dir", out},
                    sink, sink);
  };
  code |= compare((dir.path() / "run1").string(), "1");
  code |= compare((dir.path() / "run2").string(), "4");
  if (code != 0) return {false, "compare failed: " + sink.str()};
  std::size_t files = 0, identical = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir.path() / "run1")) {
    ++files;
    const auto twin = dir.path() / "run2" / entry.path().filename();
    if (std::filesystem::exists(twin) && testing::ReadFile(entry.path()) == testing::ReadFile(twin)) {
      ++identical;
    }
  }
  return {files == 5 && identical == files,
          std::to_string(identical) + "/" + std::to_string(files) +
              " output files byte-identical (jobs 1 vs 4)"};
}

}  // namespace
}  // namespace focalstage

int main() {
  using focalstage::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", focalstage::GradientCorrectness},
      {"convexity of the convex stage", focalstage::Convexity},
      {"reduction identity", focalstage::ReductionIdentity},
      {"schedule fidelity", focalstage::ScheduleFidelity},
      {"Shapley efficiency, dummy and symmetry", focalstage::ShapleyAxioms},
      {"linear closed form", focalstage::LinearClosedForm},
      {"sampling convergence", focalstage::SamplingConvergence},
      {"AUC oracle", focalstage::AucOracle},
      {"chi-square critical values", focalstage::ChiSquareCriticalValues},
      {"VIF pruning", focalstage::VifPruning},
      {"SMOTE geometry", focalstage::SmoteGeometry},
      {"stratification", focalstage::Stratification},
      {"directional replication", focalstage::DirectionalReplication},
      {"determinism", focalstage::Determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failures += !outcome.pass;
    std::printf("%s %2zu. %s: %s\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
