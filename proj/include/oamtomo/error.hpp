// Copyright 2026 The oamtomo Authors
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

namespace oamtomo {

/// Rejected input: a precondition of a library call does not hold.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file or spec document could not be parsed or does not satisfy its schema.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  /// 1-based line number of the offending input, or 0 when not line-oriented.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Experiment spec failed validation (CLI exit code 2).
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace oamtomo
