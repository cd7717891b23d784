// Copyright 2026 The confkit Authors
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

#ifndef CONFKIT_ERROR_HPP_
#define CONFKIT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace confkit {

/// Bad or inconsistent input data (corpus invariants, schema mismatch, ...).
/// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments to an operation; exit code 1 at the CLI.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A quantity is mathematically undefined for the given input (single-class
/// AUC, NCE with constant labels, non-finite values). Exit code 3.
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace confkit

#endif  // CONFKIT_ERROR_HPP_
