// Copyright 2026 The survint Authors.
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

#ifndef SURVINT_ERROR_HPP
#define SURVINT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace survint {

/// Base class for all library failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invalid input data (missing columns, bad cells, nonpositive weights).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: rank deficiency, non-convergence, saturated model.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument combination supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace survint

#endif
