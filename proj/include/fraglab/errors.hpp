// Copyright 2026-present the fraglab project
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

#include <stdexcept>
#include <string>

namespace fraglab {

// Invalid configuration or arguments. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file. Maps to CLI exit code 1.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, long row = -1)
        : std::runtime_error(row >= 0 ? what + " (row " + std::to_string(row) + ")" : what),
          row_(row) {}

    long row() const { return row_; }

private:
    long row_;
};

// Rank-deficient or numerically singular system. Maps to CLI exit code 2.
// Never silently pseudo-inverted; carries the observed condition number.
class SingularDesignError : public std::runtime_error {
public:
    SingularDesignError(const std::string& what, double condition_number)
        : std::runtime_error(what + " (condition number " + std::to_string(condition_number) + ")"),
          condition_number_(condition_number) {}

    double condition_number() const { return condition_number_; }

private:
    double condition_number_;
};

}  // namespace fraglab
