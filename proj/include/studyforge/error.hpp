#pragma once

#include <stdexcept>
#include <string>

namespace studyforge {

/// Domain error: invalid input content or a violated operation contract.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// Input text that fails to parse. Positions are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message, int line = 0, int column = 0)
      : Error(with_position(message, line, column)), line_(line), column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  static std::string with_position(const std::string& message, int line, int column) {
    if (line <= 0) {
      return message;
    }
    std::string prefix = "line " + std::to_string(line);
    if (column > 0) {
      prefix += ", column " + std::to_string(column);
    }
    return prefix + ": " + message;
  }

  int line_;
  int column_;
};

}  // namespace studyforge
