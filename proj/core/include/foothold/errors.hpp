#pragma once

#include <stdexcept>
#include <string>

namespace foothold {

/// Malformed or inconsistent input data (files, shapes, configuration values).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values encountered during training or evaluation.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace foothold
