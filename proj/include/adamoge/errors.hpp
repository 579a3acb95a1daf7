#pragma once

#include <stdexcept>
#include <string>

namespace adamoge {

// Bad configuration or command-line usage. Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or malformed input data. Maps to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values in a loss, gradient or parameter. Maps to exit code 3.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::string where = {})
      : std::runtime_error(where.empty() ? what : what + " (" + where + ")"),
        where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

}  // namespace adamoge
