#pragma once

#include <stdexcept>
#include <string>

namespace tglrn {

// Exit codes used by the command line front end.
enum class ErrorCode : int {
  kConfig = 2,
  kData = 3,
  kNumeric = 4,
  kGradcheck = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Bad configuration: unknown keys, invalid schedules, shape mismatches between ops.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::kConfig, what) {}
};

/// Bad input data: out-of-range ids, ragged CSV rows, series too short.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorCode::kData, what) {}
};

/// Malformed or incompatible checkpoint file.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorCode::kData, what) {}
};

/// Non-finite loss or gradient during training.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorCode::kNumeric, what) {}
};

/// Operation invoked in the wrong order (e.g. backward before forward).
class StateError : public Error {
 public:
  explicit StateError(const std::string& what) : Error(ErrorCode::kNumeric, what) {}
};

}  // namespace tglrn
