// Copyright 2026 The InherNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef INHERNET_ERRORS_H_
#define INHERNET_ERRORS_H_

#include <stdexcept>
#include <string>

namespace inhernet {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not compose.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An index, rank or label lies outside its valid range.
class RangeError : public Error {
 public:
  using Error::Error;
};

// An iterative method failed, or a non-finite value appeared.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual = 0.0)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// The input has no meaningful answer (all-zero matrix, empty spectrum).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// An operation was called out of order (backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

// Bad magic, version or manifest in a checkpoint.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Checkpoint payload disagrees with its manifest.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

// Malformed delimited text. line() is 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace inhernet

#endif  // INHERNET_ERRORS_H_
