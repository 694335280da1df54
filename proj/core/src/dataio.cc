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

#include "focalstage/dataio.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace focalstage {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

double Median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

std::string Position(std::size_t row, std::size_t column,
                     const std::string& column_name) {
  std::ostringstream out;
  out << "row " << row << ", column " << column << " (" << column_name << ")";
  return out.str();
}

double RawValue(const ColumnEncoder& enc, std::string_view cell) {
  cell = Trim(cell);
  switch (enc.kind) {
    case ColumnKind::kCategorical: {
      const auto it = std::find(enc.categories.begin(), enc.categories.end(), cell);
      if (it == enc.categories.end()) {
        throw DataError("unknown category '" + std::string(cell) + "'");
      }
      return static_cast<double>(it - enc.categories.begin());
    }
    case ColumnKind::kNumeric: {
      if (cell.empty()) return enc.impute;
      const auto v = ParseReal(cell);
      if (!v) throw DataError("not a number: '" + std::string(cell) + "'");
      return *v;
    }
    case ColumnKind::kDate: {
      if (cell.empty()) return enc.impute;
      const auto v = ParseDateOrdinal(cell);
      if (!v) throw DataError("not a YYYY-MM-DD date: '" + std::string(cell) + "'");
      return static_cast<double>(*v);
    }
  }
  return 0.0;
}

}  // namespace

std::string_view ColumnKindName(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kCategorical:
      return "categorical";
    case ColumnKind::kNumeric:
      return "numeric";
    case ColumnKind::kDate:
      return "date";
  }
  return "unknown";
}

std::optional<double> ParseReal(std::string_view text) {
  text = Trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<long> ParseDateOrdinal(std::string_view text) {
  text = Trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  const auto y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y},
                                       std::chrono::month{static_cast<unsigned>(*m)},
                                       std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  return static_cast<long>(std::chrono::sys_days{ymd}.time_since_epoch().count());
}

std::vector<std::vector<std::string>> ParseCsv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  char c;

  auto end_field = [&]() {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&]() {
    end_field();
    // A bare empty line is skipped rather than read as a one-field record.
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started || field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) {
    throw DataError("unterminated quoted field starting before line " +
                    std::to_string(line));
  }
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

ColumnKind InferColumnKind(const std::vector<std::string_view>& cells) {
  bool any = false, all_dates = true, all_numeric = true;
  for (std::string_view cell : cells) {
    cell = Trim(cell);
    if (cell.empty()) continue;
    any = true;
    if (all_dates && !ParseDateOrdinal(cell)) all_dates = false;
    if (all_numeric && !ParseReal(cell)) all_numeric = false;
    if (!all_dates && !all_numeric) break;
  }
  if (!any) return ColumnKind::kCategorical;
  if (all_dates) return ColumnKind::kDate;
  if (all_numeric) return ColumnKind::kNumeric;
  return ColumnKind::kCategorical;
}

void TabularDataset::Validate() const {
  const std::size_t width = column_names.size();
  if (column_kinds.size() != width) {
    throw DataError("column kinds do not match column names");
  }
  std::map<std::string, std::size_t> seen;
  for (std::size_t j = 0; j < width; ++j) {
    if (!seen.emplace(column_names[j], j).second) {
      throw DataError("duplicate column name '" + column_names[j] + "'");
    }
  }
  if (labels.size() != rows.size()) {
    throw DataError("label count does not match row count");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != width) {
      throw DataError("row " + std::to_string(i + 1) + ": expected " +
                      std::to_string(width) + " values, found " +
                      std::to_string(rows[i].size()));
    }
    if (labels[i] != 0 && labels[i] != 1) {
      throw DataError("row " + std::to_string(i + 1) + ": label is not 0 or 1");
    }
  }
}

TabularDataset MakeDataset(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& records,
                           std::string_view label_name) {
  const auto label_it = std::find(header.begin(), header.end(), label_name);
  if (label_it == header.end()) {
    throw DataError("label column '" + std::string(label_name) +
                    "' not found in header");
  }
  const std::size_t label_col = static_cast<std::size_t>(label_it - header.begin());

  TabularDataset ds;
  ds.label_name = std::string(label_name);
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != label_col) ds.column_names.push_back(std::string(Trim(header[j])));
  }

  // Record numbers are 1-based data rows; the header is line 1 of the file,
  // so data row r sits on line r + 1.
  std::vector<std::string> raw_labels;
  raw_labels.reserve(records.size());
  ds.rows.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& record = records[i];
    if (record.size() != header.size()) {
      throw DataError("row " + std::to_string(i + 1) + " (line " +
                      std::to_string(i + 2) + "): expected " +
                      std::to_string(header.size()) + " columns, found " +
                      std::to_string(record.size()) + " (column " +
                      std::to_string(std::min(record.size(), header.size()) + 1) +
                      " is the first mismatch)");
    }
    std::vector<std::string> row;
    row.reserve(header.size() - 1);
    for (std::size_t j = 0; j < record.size(); ++j) {
      if (j == label_col) {
        raw_labels.emplace_back(Trim(record[j]));
      } else {
        row.emplace_back(Trim(record[j]));
      }
    }
    ds.rows.push_back(std::move(row));
  }

  std::map<std::string, std::size_t> label_counts;
  for (const auto& v : raw_labels) ++label_counts[v];
  if (label_counts.size() != 2) {
    std::ostringstream msg;
    msg << "label column '" << label_name << "' must have exactly 2 distinct values, found "
        << label_counts.size();
    if (label_counts.size() > 2) {
      // Point at the first row carrying a third value.
      const std::string first = raw_labels.front();
      std::string second;
      for (std::size_t i = 0; i < raw_labels.size(); ++i) {
        if (raw_labels[i] == first) continue;
        if (second.empty()) {
          second = raw_labels[i];
        } else if (raw_labels[i] != second) {
          msg << " (third value '" << raw_labels[i] << "' at row " << i + 1
              << ", column " << label_col + 1 << ")";
          break;
        }
      }
    }
    throw DataError(msg.str());
  }
  auto first = label_counts.begin();
  auto second = std::next(first);
  // Minority maps to 1; a tie maps the lexicographically larger value to 1.
  if (first->second < second->second) {
    ds.positive_label = first->first;
    ds.negative_label = second->first;
  } else {
    ds.positive_label = second->first;
    ds.negative_label = first->first;
  }
  ds.labels.reserve(raw_labels.size());
  for (const auto& v : raw_labels) ds.labels.push_back(v == ds.positive_label ? 1 : 0);

  const std::size_t width = ds.column_names.size();
  ds.column_kinds.resize(width);
  for (std::size_t j = 0; j < width; ++j) {
    std::vector<std::string_view> cells;
    cells.reserve(ds.rows.size());
    for (const auto& row : ds.rows) cells.emplace_back(row[j]);
    ds.column_kinds[j] = InferColumnKind(cells);
  }
  ds.Validate();
  return ds;
}

TabularDataset LoadCsv(const std::filesystem::path& path, std::string_view label_name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file '" + path.string() + "'");
  auto records = ParseCsv(in);
  if (records.empty()) throw DataError("'" + path.string() + "' has no header row");
  std::vector<std::string> header = std::move(records.front());
  records.erase(records.begin());
  // Strip a UTF-8 byte-order mark from the first header cell.
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
  for (auto& name : header) name = std::string(Trim(name));
  return MakeDataset(header, records, label_name);
}

namespace {
std::string QuoteCsv(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}
}  // namespace

void WriteCsv(const TabularDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (const auto& name : ds.column_names) out << QuoteCsv(name) << ',';
  out << QuoteCsv(ds.label_name) << '\n';
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    for (const auto& cell : ds.rows[i]) out << QuoteCsv(cell) << ',';
    out << QuoteCsv(ds.labels[i] == 1 ? ds.positive_label : ds.negative_label) << '\n';
  }
}

double ColumnEncoder::Scale(double raw) const {
  const double range = max - min;
  if (range <= 0.0) return 0.0;
  return std::clamp((raw - min) / range, 0.0, 1.0);
}

double ColumnEncoder::Unscale(double scaled) const {
  return min + scaled * (max - min);
}

double ColumnEncoder::Encode(std::string_view cell) const {
  return Scale(RawValue(*this, cell));
}

const std::string& ColumnEncoder::DecodeCategory(double scaled) const {
  if (kind != ColumnKind::kCategorical || categories.empty()) {
    throw InvalidArgument("DecodeCategory on a non-categorical column");
  }
  const double code = std::round(Unscale(scaled));
  const auto index = static_cast<std::size_t>(
      std::clamp(code, 0.0, static_cast<double>(categories.size() - 1)));
  return categories[index];
}

std::size_t EncodedMatrix::CountLabel(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

EncodedMatrix EncodedMatrix::SelectRows(const std::vector<std::size_t>& indices) const {
  EncodedMatrix out;
  out.feature_names = feature_names;
  out.encoders = encoders;
  out.values.resize(static_cast<Eigen::Index>(indices.size()), values.cols());
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) =
        values.row(static_cast<Eigen::Index>(indices[i]));
    out.labels.push_back(labels[indices[i]]);
  }
  return out;
}

EncodedMatrix EncodedMatrix::SelectColumns(const std::vector<std::size_t>& columns) const {
  EncodedMatrix out;
  out.labels = labels;
  out.values.resize(values.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    out.values.col(static_cast<Eigen::Index>(j)) =
        values.col(static_cast<Eigen::Index>(columns[j]));
    if (columns[j] < feature_names.size()) out.feature_names.push_back(feature_names[columns[j]]);
    if (columns[j] < encoders.size()) out.encoders.push_back(encoders[columns[j]]);
  }
  return out;
}

EncodedMatrix Encode(const TabularDataset& ds) {
  ds.Validate();
  const std::size_t n = ds.num_rows();
  const std::size_t d = ds.num_columns();

  EncodedMatrix out;
  out.feature_names = ds.column_names;
  out.labels = ds.labels;
  out.encoders.resize(d);

  for (std::size_t j = 0; j < d; ++j) {
    ColumnEncoder& enc = out.encoders[j];
    enc.kind = ds.column_kinds[j];
    if (enc.kind == ColumnKind::kCategorical) {
      std::unordered_map<std::string, std::size_t> codes;
      for (const auto& row : ds.rows) {
        if (codes.emplace(row[j], enc.categories.size()).second) {
          enc.categories.push_back(row[j]);
        }
      }
      enc.min = 0.0;
      enc.max = enc.categories.empty() ? 0.0 : static_cast<double>(enc.categories.size() - 1);
      continue;
    }
    std::vector<double> observed;
    observed.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& cell = ds.rows[i][j];
      if (cell.empty()) continue;
      const std::optional<double> v =
          enc.kind == ColumnKind::kNumeric
              ? ParseReal(cell)
              : [&]() -> std::optional<double> {
                  const auto o = ParseDateOrdinal(cell);
                  if (!o) return std::nullopt;
                  return static_cast<double>(*o);
                }();
      if (!v) {
        throw DataError(Position(i + 1, j + 1, ds.column_names[j]) + ": cannot parse '" +
                        cell + "' as " + std::string(ColumnKindName(enc.kind)));
      }
      observed.push_back(*v);
    }
    enc.impute = Median(observed);
    if (observed.empty()) {
      enc.min = enc.max = 0.0;
    } else {
      const auto [lo, hi] = std::minmax_element(observed.begin(), observed.end());
      enc.min = *lo;
      enc.max = *hi;
    }
  }

  out.values = ApplyEncoders(out.encoders, ds.rows);
  return out;
}

RowMatrix ApplyEncoders(const std::vector<ColumnEncoder>& encoders,
                        const std::vector<std::vector<std::string>>& rows) {
  const std::size_t d = encoders.size();
  RowMatrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) {
      throw DataError("row " + std::to_string(i + 1) + ": expected " + std::to_string(d) +
                      " values, found " + std::to_string(rows[i].size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      try {
        values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            encoders[j].Encode(rows[i][j]);
      } catch (const DataError& e) {
        throw DataError("row " + std::to_string(i + 1) + ", column " +
                        std::to_string(j + 1) + ": " + e.what());
      }
    }
  }
  return values;
}

EncodedMatrix FromNumeric(const RowMatrix& raw, std::vector<int> labels,
                          std::vector<std::string> feature_names) {
  if (static_cast<std::size_t>(raw.rows()) != labels.size()) {
    throw DataError("label count does not match row count");
  }
  const auto d = static_cast<std::size_t>(raw.cols());
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < d; ++j) feature_names.push_back("x" + std::to_string(j));
  }
  if (feature_names.size() != d) throw DataError("feature name count does not match columns");

  EncodedMatrix out;
  out.feature_names = std::move(feature_names);
  out.labels = std::move(labels);
  out.encoders.resize(d);
  out.values.resize(raw.rows(), raw.cols());
  for (std::size_t j = 0; j < d; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    ColumnEncoder& enc = out.encoders[j];
    enc.kind = ColumnKind::kNumeric;
    if (raw.rows() > 0) {
      enc.min = raw.col(col).minCoeff();
      enc.max = raw.col(col).maxCoeff();
      std::vector<double> values(raw.col(col).begin(), raw.col(col).end());
      enc.impute = Median(std::move(values));
    }
    for (Eigen::Index i = 0; i < raw.rows(); ++i) out.values(i, col) = enc.Scale(raw(i, col));
  }
  return out;
}

}  // namespace focalstage
