// Copyright 2026 The lobgym Authors
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

namespace lobgym {

/// Bad configuration: unknown key, malformed value, invalid parameter set.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line)
    {
    }
    int line() const { return line_; }

private:
    int line_;
};

/// Caller broke an operation's contract (stepping a finished episode,
/// duplicate order id, ...).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Numerical or I/O failure while running.
class RuntimeFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lobgym
