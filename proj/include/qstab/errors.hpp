// Copyright 2026 The qstab authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qstab {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input value violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. Row/column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg, std::size_t row = 0, std::size_t column = 0)
      : Error(locate(msg, row, column)), row_(row), column_(column) {}

  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  static std::string locate(const std::string& msg, std::size_t row, std::size_t column) {
    std::string out = msg;
    if (row != 0) {
      out += " (row " + std::to_string(row);
      if (column != 0) out += ", column " + std::to_string(column);
      out += ")";
    }
    return out;
  }

  std::size_t row_;
  std::size_t column_;
};

/// A requested register, edge, device, or field is not present.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// A nonlinear fit did not converge; carries the last residual norm.
class FitError : public Error {
 public:
  FitError(const std::string& msg, double residual)
      : Error(msg + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A fit converged to parameters outside their valid domain.
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

/// Two histograms do not share bin edges and cannot be compared.
class IncompatibleHistogramError : public Error {
 public:
  using Error::Error;
};

/// Collects non-fatal warnings from parsing and analysis routines.
/// Callers that do not care pass nullptr.
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

inline void warn(Diagnostics* diag, std::string message) {
  if (diag != nullptr) diag->warn(std::move(message));
}

}  // namespace qstab
