// Copyright 2026 The safemb Authors
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

namespace safemb {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tape construction with incompatible operand shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Unbound/unknown tape inputs, or backward before forward.
class BindingError : public Error {
 public:
  using Error::Error;
};

// A value left the domain of an operation (log of a non-positive number,
// non-finite model input, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class LayoutError : public Error {
 public:
  using Error::Error;
};

// Misuse of an episodic environment, e.g. stepping a finished episode.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

// Raised when a barrier quantity is requested at a point with J_c >= 0.
// This is the safety alarm of the barrier optimizer and is never clipped.
class InfeasibleIterate : public Error {
 public:
  explicit InfeasibleIterate(double constraint_value)
      : Error("infeasible iterate: constraint value " +
              std::to_string(constraint_value) + " >= 0"),
        constraint_value_(constraint_value) {}

  double constraint_value() const { return constraint_value_; }

 private:
  double constraint_value_;
};

}  // namespace safemb
