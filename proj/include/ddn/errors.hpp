#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ddn {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible tensor shapes.
struct DimError : Error {
  explicit DimError(const std::string& msg) : Error(msg) {}
};

// NaN/Inf produced by an operation.
struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

// API misuse: empty batch, non-scalar loss, bad horizon, invalid permutation.
struct UsageError : Error {
  explicit UsageError(const std::string& msg) : Error(msg) {}
};

// Identifier outside its valid range (e.g. action id > A).
struct RangeError : Error {
  explicit RangeError(const std::string& msg) : Error(msg) {}
};

// Problem size beyond a documented implementation limit.
struct CapacityError : Error {
  explicit CapacityError(const std::string& msg) : Error(msg) {}
};

// Rejection sampling exhausted its retry budget.
struct GenerationError : Error {
  explicit GenerationError(const std::string& msg) : Error(msg) {}
};

// Malformed binary or text artifact; carries the byte offset of the defect.
struct FormatError : Error {
  FormatError(std::size_t at, const std::string& msg)
      : Error(msg + " (at byte offset " + std::to_string(at) + ")"), offset(at) {}
  std::size_t offset;
};

// Invalid run configuration (unknown key, unparsable value, missing path).
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace ddn
