// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mivae {

/// Shapes or lengths of operands do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A precondition on argument values was violated (negative probability,
/// non-positive temperature, unknown config key, ...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file (bad magic, truncated payload, bad checkpoint).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values appeared in a computation that must stay finite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mivae
