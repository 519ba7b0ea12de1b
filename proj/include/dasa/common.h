// include/dasa/common.h

// Copyright 2026  The dasa-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef DASA_COMMON_H_
#define DASA_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dasa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Broad failure classes; the CLI maps them onto exit codes.
enum class ErrorKind {
  kValidation,  // bad input, bad config, dimension mismatch
  kNumerical,   // divergence, degenerate covariance, failed check
  kIo,          // unreadable file, malformed row
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void ThrowValidation(const std::string &what);
[[noreturn]] void ThrowNumerical(const std::string &what);
[[noreturn]] void ThrowIo(const std::string &what);

/// Formats a double with 17 significant digits, which round-trips exactly
/// through ParseDouble.
std::string FormatDouble(double value);

/// Strict parse: the whole field must be consumed. Accepts "inf"/"-inf"/"nan".
bool ParseDouble(std::string_view text, double *out);
bool ParseInt(std::string_view text, int64_t *out);

/// Splits on a single delimiter character; empty fields are kept.
std::vector<std::string> SplitFields(std::string_view line, char delim = ',');

std::string_view Trim(std::string_view s);

bool AllFinite(const Vector &v);
bool AllFinite(const Matrix &m);

}  // namespace dasa

#endif  // DASA_COMMON_H_
