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

#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "focalstage/common.h"
#include "test_support.h"

namespace focalstage {
namespace {

using testing::TempDir;
using testing::WriteFile;

TEST(ParseCsv, QuotesEscapesAndEmbeddedNewlines) {
  std::istringstream in("a,b,c\n\"x, y\",\"say \"\"hi\"\"\",\"two\nlines\"\r\n1,,3\n");
  const auto rows = ParseCsv(in);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0], "x, y");
  EXPECT_EQ(rows[1][1], "say \"hi\"");
  EXPECT_EQ(rows[1][2], "two\nlines");
  EXPECT_EQ(rows[2][1], "");
  EXPECT_EQ(rows[2][2], "3");
}

TEST(ParseCsv, UnterminatedQuoteThrows) {
  std::istringstream in("a,b\n\"open,1\n");
  EXPECT_THROW(ParseCsv(in), DataError);
}

TEST(InferColumnKind, NumericDateCategorical) {
  EXPECT_EQ(InferColumnKind({"1", "2.5", "", "-3e2"}), ColumnKind::kNumeric);
  EXPECT_EQ(InferColumnKind({"2015-01-17", "", "1990-12-31"}), ColumnKind::kDate);
  EXPECT_EQ(InferColumnKind({"1", "two"}), ColumnKind::kCategorical);
  EXPECT_EQ(InferColumnKind({"", ""}), ColumnKind::kCategorical);
  EXPECT_EQ(InferColumnKind({"2015-13-01"}), ColumnKind::kCategorical);
}

TEST(ParseDateOrdinal, DaysSinceEpoch) {
  EXPECT_EQ(ParseDateOrdinal("1970-01-01"), 0);
  EXPECT_EQ(ParseDateOrdinal("1970-01-02"), 1);
  EXPECT_EQ(ParseDateOrdinal("2000-03-01"), 11017);
  EXPECT_EQ(ParseDateOrdinal("1969-12-31"), -1);
  EXPECT_FALSE(ParseDateOrdinal("2001-02-29").has_value());
  EXPECT_FALSE(ParseDateOrdinal("01/02/2003").has_value());
}

TEST(MakeDataset, MinorityLabelMapsToOne) {
  const auto ds = MakeDataset({"x", "fraud"}, {{"1", "N"}, {"2", "Y"}, {"3", "N"}}, "fraud");
  EXPECT_EQ(ds.positive_label, "Y");
  EXPECT_EQ(ds.negative_label, "N");
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(ds.column_names, (std::vector<std::string>{"x"}));
  EXPECT_EQ(ds.column_kinds, (std::vector<ColumnKind>{ColumnKind::kNumeric}));
}

TEST(MakeDataset, TieMapsLexicographicallyLargerToOne) {
  const auto ds = MakeDataset({"x", "y"}, {{"1", "yes"}, {"2", "no"}}, "y");
  EXPECT_EQ(ds.positive_label, "yes");
  EXPECT_EQ(ds.labels, (std::vector<int>{1, 0}));
}

TEST(MakeDataset, Errors) {
  try {
    MakeDataset({"x", "y"}, {{"1", "a"}, {"2", "b"}}, "fraud_reported");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("fraud_reported"), std::string::npos);
  }
  EXPECT_THROW(MakeDataset({"x", "y"}, {{"1", "a"}, {"2", "a"}}, "y"), DataError);
  EXPECT_THROW(MakeDataset({"x", "y"}, {{"1", "a"}, {"2", "b"}, {"3", "c"}}, "y"), DataError);
  try {
    MakeDataset({"x", "y"}, {{"1", "a"}, {"2"}}, "y");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row"), std::string::npos);
  }
  EXPECT_THROW(MakeDataset({"x", "x", "y"}, {{"1", "2", "a"}, {"2", "3", "b"}}, "y"), DataError);
}

TEST(LoadCsv, ReadsFileAndReportsMissingFile) {
  TempDir dir("dataio");
  WriteFile(dir.path() / "claims.csv",
            "age,incident_date,severity,fraud_reported\n"
            "34,2015-01-17,Major Damage,Y\n"
            "51,2015-02-02,Minor Damage,N\n"
            "29,,Total Loss,N\n");
  const auto ds = LoadCsv(dir.path() / "claims.csv", "fraud_reported");
  EXPECT_EQ(ds.num_rows(), 3u);
  EXPECT_EQ(ds.num_columns(), 3u);
  EXPECT_EQ(ds.column_kinds[0], ColumnKind::kNumeric);
  EXPECT_EQ(ds.column_kinds[1], ColumnKind::kDate);
  EXPECT_EQ(ds.column_kinds[2], ColumnKind::kCategorical);
  EXPECT_EQ(ds.labels, (std::vector<int>{1, 0, 0}));
  EXPECT_THROW(LoadCsv(dir.path() / "missing.csv", "fraud_reported"), DataError);
}

TEST(LoadCsv, WriteCsvRoundTrip) {
  TempDir dir("dataio_rt");
  const auto ds = MakeDataset({"a", "b", "lbl"},
                              {{"x, y", "1", "P"}, {"z", "2", "Q"}, {"z", "3", "Q"}}, "lbl");
  WriteCsv(ds, dir.path() / "out.csv");
  const auto back = LoadCsv(dir.path() / "out.csv", "lbl");
  EXPECT_EQ(back.rows, ds.rows);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.column_names, ds.column_names);
}

EncodedMatrix EncodeColumn(const std::vector<std::string>& cells) {
  std::vector<std::vector<std::string>> records;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    records.push_back({cells[i], i == 0 ? "pos" : "neg"});
  }
  return Encode(MakeDataset({"c", "y"}, records, "y"));
}

TEST(Encode, TwoCategories) {
  const EncodedMatrix m = EncodeColumn({"a", "b", "a"});
  EXPECT_EQ(m.values(0, 0), 0.0);
  EXPECT_EQ(m.values(1, 0), 1.0);
  EXPECT_EQ(m.values(2, 0), 0.0);
  EXPECT_EQ(m.encoders[0].categories, (std::vector<std::string>{"a", "b"}));
}

TEST(Encode, NumericAffine) {
  const EncodedMatrix m = EncodeColumn({"10", "20", "30"});
  EXPECT_EQ(m.values(0, 0), 0.0);
  EXPECT_EQ(m.values(1, 0), 0.5);
  EXPECT_EQ(m.values(2, 0), 1.0);
}

TEST(Encode, ConstantColumnIsZero) {
  const EncodedMatrix m = EncodeColumn({"5", "5", "5"});
  EXPECT_TRUE((m.values.array() == 0.0).all());
}

TEST(Encode, MissingCells) {
  const EncodedMatrix num = EncodeColumn({"1", "", "3", "10"});
  // Median of {1, 3, 10} is 3.
  EXPECT_NEAR(num.encoders[0].Unscale(num.values(1, 0)), 3.0, 1e-12);
  const EncodedMatrix cat = EncodeColumn({"a", "", "b"});
  EXPECT_EQ(cat.encoders[0].categories.size(), 3u);
  EXPECT_EQ(cat.encoders[0].DecodeCategory(cat.values(1, 0)), "");
}

TEST(Encode, RoundTripsAndStaysInUnitInterval) {
  std::vector<std::vector<std::string>> records;
  for (int i = 0; i < 40; ++i) {
    records.push_back({std::to_string(i * 0.37 - 3.1), std::string(1, static_cast<char>('a' + i % 5)),
                       "2016-0" + std::to_string(1 + i % 9) + "-1" + std::to_string(i % 10),
                       i % 7 == 0 ? "Y" : "N"});
  }
  const TabularDataset ds = MakeDataset({"num", "cat", "date", "y"}, records, "y");
  const EncodedMatrix m = Encode(ds);
  EXPECT_GE(m.values.minCoeff(), 0.0);
  EXPECT_LE(m.values.maxCoeff(), 1.0);
  EXPECT_TRUE(m.values.allFinite());
  for (std::size_t i = 0; i < ds.num_rows(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    EXPECT_NEAR(m.encoders[0].Decode(m.values(r, 0)), *ParseReal(ds.rows[i][0]), 1e-12);
    EXPECT_EQ(m.encoders[1].DecodeCategory(m.values(r, 1)), ds.rows[i][1]);
    EXPECT_NEAR(m.encoders[2].Decode(m.values(r, 2)),
                static_cast<double>(*ParseDateOrdinal(ds.rows[i][2])), 1e-9);
    EXPECT_DOUBLE_EQ(m.encoders[1].Encode(ds.rows[i][1]), m.values(r, 1));
  }
  const EncodedMatrix again = Encode(ds);
  EXPECT_EQ(again.values, m.values);
  EXPECT_EQ(ApplyEncoders(m.encoders, ds.rows), m.values);
  EXPECT_THROW(m.encoders[1].Encode("zzz"), DataError);
}

TEST(EncodedMatrix, SelectRowsAndColumns) {
  RowMatrix raw(4, 3);
  raw << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
  const EncodedMatrix m = FromNumeric(raw, {0, 1, 0, 1}, {"a", "b", "c"});
  EXPECT_EQ(m.CountLabel(1), 2u);
  const EncodedMatrix rows = m.SelectRows({3, 0});
  EXPECT_EQ(rows.labels, (std::vector<int>{1, 0}));
  EXPECT_EQ(rows.values.row(0), m.values.row(3));
  const EncodedMatrix cols = m.SelectColumns({2, 0});
  EXPECT_EQ(cols.feature_names, (std::vector<std::string>{"c", "a"}));
  EXPECT_EQ(cols.values.col(0), m.values.col(2));
  EXPECT_EQ(cols.labels, m.labels);
}

}  // namespace
}  // namespace focalstage
