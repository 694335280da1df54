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

#ifndef FOCALSTAGE_COMMON_H_
#define FOCALSTAGE_COMMON_H_

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace focalstage {

// Row-major dense matrix used for every (rows x features) table.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Base class for every error raised by the library. The CLI maps these to
// exit code 1 and prints what() as the diagnostic line.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CSV shape, labels, dimensions).
class DataError : public Error {
 public:
  using Error::Error;
};

// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Numerical failure during training (non-finite loss and similar).
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace focalstage

#endif  // FOCALSTAGE_COMMON_H_
