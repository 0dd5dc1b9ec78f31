// Copyright 2026 The PARGS Authors.
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

#ifndef PARGS_ERRORS_H_
#define PARGS_ERRORS_H_

#include <stdexcept>
#include <string>

namespace pargs {

// Malformed or unreadable input files.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss or weight.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An exact enumeration would visit more states than allowed.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pargs

#endif  // PARGS_ERRORS_H_
