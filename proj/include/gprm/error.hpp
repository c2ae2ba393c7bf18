#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gprm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed GPIR or GPC source. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(format(message, line, column)), message_(message), line_(line), column_(column) {}

  const std::string& message() const noexcept { return message_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& message, std::size_t line, std::size_t column) {
    if (line == 0) return message;
    return std::to_string(line) + ":" + std::to_string(column) + ": " + message;
  }

  std::string message_;
  std::size_t line_;
  std::size_t column_;
};

class CompileError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or inconsistent bytecode image.
class ImageError : public Error {
 public:
  using Error::Error;
};

/// An error raised while reducing a program: kernel failures, arity
/// mismatches, stuck reductions.
class RuntimeError : public Error {
 public:
  using Error::Error;
};

/// Violation of the packet protocol between tiles (double delivery,
/// results for freed records). Always an engine bug or corrupted bytecode.
class ProtocolError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

}  // namespace gprm
