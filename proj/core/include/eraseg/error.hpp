#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eraseg {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError -> 2, DataError -> 3, NumericError -> 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values where finite arithmetic is required (training aborts).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed on-disk format; carries the byte offset of the failure.
struct ParseError : DataError {
  ParseError(const std::string& msg, std::size_t offset)
      : DataError(msg + " (byte offset " + std::to_string(offset) + ")"),
        byte_offset(offset) {}

  std::size_t byte_offset;
};

}  // namespace eraseg
