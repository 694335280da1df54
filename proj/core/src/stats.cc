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

#include "focalstage/stats.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <unordered_map>

#include "focalstage/parallel.h"

namespace focalstage {
namespace {

constexpr int kMaxGammaIterations = 1000;
constexpr double kGammaTolerance = 1e-15;

double GammaSeries(double a, double x) {
  // P(a, x) = x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n))
  double term = 1.0 / a;
  double sum = term;
  double denom = a;
  for (int n = 0; n < kMaxGammaIterations; ++n) {
    denom += 1.0;
    term *= x / denom;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kGammaTolerance) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double GammaContinuedFraction(double a, double x) {
  // Modified Lentz evaluation of Q(a, x).
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxGammaIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kGammaTolerance) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double RegularizedGammaP(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw InvalidArgument("incomplete gamma needs a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return GammaSeries(a, x);
  return 1.0 - GammaContinuedFraction(a, x);
}

double RegularizedGammaQ(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw InvalidArgument("incomplete gamma needs a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - GammaSeries(a, x);
  return GammaContinuedFraction(a, x);
}

double ChiSquareSurvival(double statistic, double degrees_of_freedom) {
  if (statistic <= 0.0) return 1.0;
  return std::clamp(RegularizedGammaQ(0.5 * degrees_of_freedom, 0.5 * statistic), 0.0, 1.0);
}

ChiSquareResult ChiSquareTest(const ContingencyTable& table) {
  if (table.size() < 2 || table.front().size() < 2) {
    throw InvalidArgument("contingency table needs at least 2 rows and 2 columns");
  }
  const std::size_t cols = table.front().size();
  for (const auto& row : table) {
    if (row.size() != cols) throw InvalidArgument("ragged contingency table");
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw InvalidArgument("contingency counts must be finite and nonnegative");
      }
    }
  }

  std::vector<double> row_sums, col_sums(cols, 0.0);
  std::vector<std::size_t> kept_rows;
  for (std::size_t i = 0; i < table.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += table[i][j];
    if (s > 0.0) {
      kept_rows.push_back(i);
      row_sums.push_back(s);
      for (std::size_t j = 0; j < cols; ++j) col_sums[j] += table[i][j];
    }
  }
  std::vector<std::size_t> kept_cols;
  for (std::size_t j = 0; j < cols; ++j) {
    if (col_sums[j] > 0.0) kept_cols.push_back(j);
  }
  if (kept_rows.size() < 2 || kept_cols.size() < 2) {
    throw InvalidArgument("degenerate table");
  }

  double total = 0.0;
  for (double s : row_sums) total += s;

  ChiSquareResult result;
  for (std::size_t r = 0; r < kept_rows.size(); ++r) {
    for (std::size_t j : kept_cols) {
      const double expected = row_sums[r] * col_sums[j] / total;
      const double diff = table[kept_rows[r]][j] - expected;
      result.statistic += diff * diff / expected;
    }
  }
  result.degrees_of_freedom =
      static_cast<int>((kept_rows.size() - 1) * (kept_cols.size() - 1));
  result.p_value = ChiSquareSurvival(result.statistic, result.degrees_of_freedom);
  return result;
}

ContingencyTable CrossTabulate(const std::vector<std::string>& a,
                               const std::vector<std::string>& b) {
  if (a.size() != b.size()) throw InvalidArgument("cross-tabulation of unequal columns");
  std::map<std::string, std::size_t> a_codes, b_codes;
  for (const auto& v : a) a_codes.emplace(v, 0);
  for (const auto& v : b) b_codes.emplace(v, 0);
  std::size_t next = 0;
  for (auto& [_, code] : a_codes) code = next++;
  next = 0;
  for (auto& [_, code] : b_codes) code = next++;
  ContingencyTable table(a_codes.size(), std::vector<double>(b_codes.size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) table[a_codes[a[i]]][b_codes[b[i]]] += 1.0;
  return table;
}

ChiSquareMatrix ComputeChiSquareMatrix(const TabularDataset& ds, int jobs) {
  ChiSquareMatrix out;
  std::vector<std::vector<std::string>> columns;
  for (std::size_t j = 0; j < ds.num_columns(); ++j) {
    if (ds.column_kinds[j] == ColumnKind::kNumeric) continue;
    out.feature_names.push_back(ds.column_names[j]);
    std::vector<std::string> column;
    column.reserve(ds.num_rows());
    for (const auto& row : ds.rows) column.push_back(row[j]);
    columns.push_back(std::move(column));
  }
  // The binary label is itself categorical and counts toward the minimum of two.
  if (columns.size() + 1 < 2) {
    throw InvalidArgument("chi-square matrix needs at least 2 categorical columns (label "
                          "included), found " + std::to_string(columns.size() + 1));
  }
  out.feature_names.push_back(ds.label_name);
  std::vector<std::string> label_column;
  label_column.reserve(ds.num_rows());
  for (int y : ds.labels) label_column.push_back(y == 1 ? ds.positive_label : ds.negative_label);
  columns.push_back(std::move(label_column));

  const std::size_t m = columns.size();
  out.p_values.assign(m, std::vector<double>(m, 0.0));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
  }
  std::vector<double> p(pairs.size(), 1.0);
  ParallelFor(pairs.size(), jobs, [&](std::size_t t) {
    const auto [i, j] = pairs[t];
    try {
      p[t] = ChiSquareTest(CrossTabulate(columns[i], columns[j])).p_value;
    } catch (const InvalidArgument&) {
      p[t] = 1.0;
    }
  });
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const auto [i, j] = pairs[t];
    out.p_values[i][j] = out.p_values[j][i] = p[t];
  }
  return out;
}

namespace {
std::string CsvCell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::string FormatReal(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}
}  // namespace

void WriteChiSquareCsv(const ChiSquareMatrix& matrix, std::ostream& out) {
  // Empty corner cell: the header row carries only feature names.
  for (const auto& name : matrix.feature_names) out << ',' << CsvCell(name);
  out << '\n';
  for (std::size_t i = 0; i < matrix.feature_names.size(); ++i) {
    out << CsvCell(matrix.feature_names[i]);
    for (double p : matrix.p_values[i]) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6e", p);
      out << ',' << buf;
    }
    out << '\n';
  }
}

std::vector<double> ComputeVif(const RowMatrix& x) {
  constexpr double kRidge = 1e-10;
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n <= d) throw InvalidArgument("underdetermined regression");

  // Centering absorbs the intercept.
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd gram = centered.transpose() * centered;

  std::vector<double> vif(static_cast<std::size_t>(d), 1.0);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sst = gram(j, j);
    if (sst <= 0.0) {
      vif[static_cast<std::size_t>(j)] = std::numeric_limits<double>::infinity();
      continue;
    }
    if (d == 1) continue;
    std::vector<Eigen::Index> others;
    for (Eigen::Index k = 0; k < d; ++k) {
      if (k != j) others.push_back(k);
    }
    const auto m = static_cast<Eigen::Index>(others.size());
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd b(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      b(r) = gram(others[r], j);
      for (Eigen::Index c = 0; c < m; ++c) a(r, c) = gram(others[r], others[c]);
      a(r, r) += kRidge;
    }
    const Eigen::VectorXd beta = a.ldlt().solve(b);
    Eigen::VectorXd fitted = Eigen::VectorXd::Zero(n);
    for (Eigen::Index r = 0; r < m; ++r) fitted += beta(r) * centered.col(others[r]);
    const double ssr = (centered.col(j) - fitted).squaredNorm();
    const double one_minus_r2 = ssr / sst;
    vif[static_cast<std::size_t>(j)] = one_minus_r2 <= 0.0
                                           ? std::numeric_limits<double>::infinity()
                                           : 1.0 / one_minus_r2;
  }
  return vif;
}

PruneTrace VifPrune(const EncodedMatrix& matrix, double threshold) {
  const std::size_t d = matrix.num_features();
  if (d < 2) throw InvalidArgument("VIF pruning needs at least 2 feature columns");
  if (matrix.num_rows() <= d) throw InvalidArgument("underdetermined regression");

  PruneTrace trace;
  trace.threshold = threshold;
  std::vector<std::size_t> active(d);
  for (std::size_t j = 0; j < d; ++j) active[j] = j;

  auto name_of = [&](std::size_t col) {
    return col < matrix.feature_names.size() ? matrix.feature_names[col]
                                             : "x" + std::to_string(col);
  };

  while (active.size() > 1) {
    RowMatrix sub(matrix.values.rows(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) {
      sub.col(static_cast<Eigen::Index>(k)) =
          matrix.values.col(static_cast<Eigen::Index>(active[k]));
    }
    const std::vector<double> vif = ComputeVif(sub);
    std::size_t worst = 0;
    for (std::size_t k = 1; k < vif.size(); ++k) {
      if (vif[k] > vif[worst]) worst = k;
    }
    if (!(vif[worst] > threshold)) break;
    trace.removed.push_back({name_of(active[worst]), vif[worst]});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(worst));
  }

  trace.retained_columns = active;
  for (std::size_t col : active) trace.retained.push_back(name_of(col));
  return trace;
}

void WritePruneTrace(const PruneTrace& trace, std::ostream& out) {
  for (const auto& step : trace.removed) {
    out << "removed " << step.feature_name << " vif=" << FormatReal(step.vif_at_removal)
        << '\n';
  }
  out << "threshold " << FormatReal(trace.threshold) << '\n';
  out << "retained " << trace.retained.size() << ':';
  for (const auto& name : trace.retained) out << ' ' << name;
  out << '\n';
}

}  // namespace focalstage
