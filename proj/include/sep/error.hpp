// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sep {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or channel counts do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A NaN/Inf reached an operation boundary, or a loss went non-finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An argument is outside its documented domain (N <= 0, stride < 1, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Malformed file or configuration.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace sep
