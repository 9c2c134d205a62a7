// include/reid/error.h

// Copyright 2026  The reid-risk Authors
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

#ifndef REID_ERROR_H_
#define REID_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reid {

// Bad input: malformed files, invalid parameters, infeasible geometry.
// The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A parse failure tied to a line of a text input (1-based).
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string &what)
      : ValidationError("line " + std::to_string(line) + ": " + what),
        line_(line),
        detail_(what) {}
  std::size_t line() const { return line_; }
  const std::string &detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

// Numerical breakdown during estimation (exit code 2 in the CLI).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The averaged threshold protocol produced no usable run.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace reid

#endif  // REID_ERROR_H_
