// Copyright 2026 The GAFX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <stdexcept>
#include <string>

namespace gafx {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor extents.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller violated an input contract (channel layout, sample rate, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Malformed on-disk data (WAV, feature dumps).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Corrupted or truncated checkpoint.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class IngestionError : public Error {
 public:
  using Error::Error;
};

// Estimated memory of a run exceeds the configured budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

// An op produced a NaN or infinity.
class NonFiniteError : public Error {
 public:
  NonFiniteError(std::string op, const std::string& detail)
      : Error("non-finite value produced by " + op + ": " + detail),
        op_(std::move(op)) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

}  // namespace gafx
