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

#ifndef FOCALSTAGE_STATS_H_
#define FOCALSTAGE_STATS_H_

#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "focalstage/common.h"
#include "focalstage/dataio.h"

namespace focalstage {

// Regularized lower and upper incomplete gamma functions P(a, x), Q(a, x).
// Series expansion below x < a + 1, Lentz continued fraction above.
double RegularizedGammaP(double a, double x);
double RegularizedGammaQ(double a, double x);

// Upper tail probability of the chi-square distribution.
double ChiSquareSurvival(double statistic, double degrees_of_freedom);

struct ChiSquareResult {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
};

using ContingencyTable = std::vector<std::vector<double>>;

// Pearson test of independence without continuity correction. Rows and
// columns with a zero marginal are dropped first; fewer than two remaining
// rows or columns throws InvalidArgument("degenerate table").
ChiSquareResult ChiSquareTest(const ContingencyTable& table);
inline double ChiSquareP(const ContingencyTable& table) {
  return ChiSquareTest(table).p_value;
}

// Cross-tabulates two equally long columns of category values.
ContingencyTable CrossTabulate(const std::vector<std::string>& a,
                               const std::vector<std::string>& b);

struct ChiSquareMatrix {
  std::vector<std::string> feature_names;
  // Symmetric, diagonal 0.
  std::vector<std::vector<double>> p_values;
};

// Pairwise p-values over categorical and date columns (raw text values)
// plus the label column, which comes last. Pairs whose table degenerates
// (a constant column) get p = 1. Needs at least one non-numeric feature.
ChiSquareMatrix ComputeChiSquareMatrix(const TabularDataset& ds, int jobs = 1);

void WriteChiSquareCsv(const ChiSquareMatrix& matrix, std::ostream& out);

// VIF of every column: 1 / (1 - R^2) from an OLS fit (with intercept) of
// the column on all other columns. R^2 = 1 gives +infinity; so does a
// constant column.
std::vector<double> ComputeVif(const RowMatrix& x);

struct PruneStep {
  std::string feature_name;
  double vif_at_removal = 0.0;
};

struct PruneTrace {
  std::vector<PruneStep> removed;
  std::vector<std::string> retained;
  // Column indices (into the input matrix) of the retained features.
  std::vector<std::size_t> retained_columns;
  double threshold = 10.0;
};

// Repeatedly drops the single column with the largest VIF while it exceeds
// `threshold`. Ties go to the lowest column index. Requires more rows than
// columns (InvalidArgument "underdetermined regression" otherwise).
PruneTrace VifPrune(const EncodedMatrix& matrix, double threshold = 10.0);

// One "removed <name> vif=<value>" line per round, then the retained list.
void WritePruneTrace(const PruneTrace& trace, std::ostream& out);

}  // namespace focalstage

#endif  // FOCALSTAGE_STATS_H_
