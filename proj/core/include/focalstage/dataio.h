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

#ifndef FOCALSTAGE_DATAIO_H_
#define FOCALSTAGE_DATAIO_H_

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "focalstage/common.h"

namespace focalstage {

enum class ColumnKind {
  kCategorical,
  kNumeric,
  // YYYY-MM-DD cells; encoded as days since 1970-01-01.
  kDate,
};

std::string_view ColumnKindName(ColumnKind kind);

// Raw tabular data as read from disk. Cells are kept as text; the label
// column is split out of `rows` into `labels`.
struct TabularDataset {
  std::vector<std::string> column_names;
  std::vector<ColumnKind> column_kinds;
  std::vector<std::vector<std::string>> rows;
  std::string label_name;
  std::vector<int> labels;
  // Original label text for class 0 and class 1.
  std::string negative_label;
  std::string positive_label;

  std::size_t num_rows() const { return rows.size(); }
  std::size_t num_columns() const { return column_names.size(); }

  // Throws DataError if any structural invariant is broken.
  void Validate() const;
};

// Splits CSV text into records. Handles double-quote escaping and embedded
// newlines inside quoted fields. Throws DataError on an unterminated quote.
std::vector<std::vector<std::string>> ParseCsv(std::istream& in);

// Infers the kind of one column from its cells: date if every non-empty cell
// is YYYY-MM-DD, numeric if every non-empty cell parses as a real, else
// categorical. A column with no non-empty cells is categorical.
ColumnKind InferColumnKind(const std::vector<std::string_view>& cells);

// Builds a dataset from a header and records. The two distinct label values
// are mapped so the minority class becomes 1; on a tie the lexicographically
// larger value becomes 1.
TabularDataset MakeDataset(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& records,
                           std::string_view label_name);

TabularDataset LoadCsv(const std::filesystem::path& path,
                       std::string_view label_name);

// Writes the dataset back out as CSV with the label column last, using the
// original label text.
void WriteCsv(const TabularDataset& ds, const std::filesystem::path& path);

std::optional<double> ParseReal(std::string_view text);
// Days since 1970-01-01 for a strict YYYY-MM-DD string.
std::optional<long> ParseDateOrdinal(std::string_view text);

// Reversible per-column mapping into [0, 1].
struct ColumnEncoder {
  ColumnKind kind = ColumnKind::kNumeric;
  // Categorical: category text in code order (first appearance). The empty
  // string is the "missing" category.
  std::vector<std::string> categories;
  // Numeric/date: min-max parameters on the raw (or ordinal) scale.
  double min = 0.0;
  double max = 0.0;
  // Numeric/date: value substituted for empty cells.
  double impute = 0.0;

  // Raw value (after code/ordinal conversion) to scaled value.
  double Scale(double raw) const;
  double Unscale(double scaled) const;

  // Text cell to scaled value. Unknown categories and unparseable cells
  // throw DataError.
  double Encode(std::string_view cell) const;
  // Scaled value back to the raw scale: the category code for categoricals
  // is rounded to the nearest code and returned as its category text in
  // DecodeCategory; numerics come back as reals.
  double Decode(double scaled) const { return Unscale(scaled); }
  const std::string& DecodeCategory(double scaled) const;
};

struct EncodedMatrix {
  RowMatrix values;
  std::vector<std::string> feature_names;
  std::vector<ColumnEncoder> encoders;
  std::vector<int> labels;

  std::size_t num_rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t num_features() const {
    return static_cast<std::size_t>(values.cols());
  }
  std::size_t CountLabel(int label) const;

  // Copy of the selected rows, keeping names and encoders.
  EncodedMatrix SelectRows(const std::vector<std::size_t>& indices) const;
  // Copy of the selected columns, keeping labels.
  EncodedMatrix SelectColumns(const std::vector<std::size_t>& columns) const;
};

// Fits encoders on `ds` and applies them. Deterministic.
EncodedMatrix Encode(const TabularDataset& ds);

// Applies already-fitted encoders to rows of another dataset with the same
// columns.
RowMatrix ApplyEncoders(const std::vector<ColumnEncoder>& encoders,
                        const std::vector<std::vector<std::string>>& rows);

// Min-max scales every column of a raw numeric matrix into [0, 1] and wraps
// it as an EncodedMatrix with numeric encoders.
EncodedMatrix FromNumeric(const RowMatrix& raw, std::vector<int> labels,
                          std::vector<std::string> feature_names = {});

}  // namespace focalstage

#endif  // FOCALSTAGE_DATAIO_H_
