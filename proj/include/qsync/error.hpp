// Copyright 2026 The qsync Authors
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

namespace qsync {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operands with incompatible shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Input that violates a documented invariant (bad state, bad config field).
class ValidationError : public Error {
public:
    using Error::Error;
};

// A computation produced a result outside its numerical contract.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace qsync
