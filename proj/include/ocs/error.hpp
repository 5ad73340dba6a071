/*
 Copyright 2026 The OCS Authors.
 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>

namespace ocs {

/// Malformed input file; carries the 1-based line number when known.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        detail_(what),
        line_(line) {}
  int line() const { return line_; }
  /// The message without the line prefix.
  const std::string& detail() const { return detail_; }

 private:
  std::string detail_;
  int line_;
};

/// Inputs that violate a component's preconditions (empty training sets, bad labels, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ocs
