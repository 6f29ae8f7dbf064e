#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ransom {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two vectors that must share a layout do not.
class LayoutError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters (eta out of range, unknown kind, bad tail index, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN or Inf. `block()` names the offending block.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::string block)
      : Error(what), block_(std::move(block)) {}
  const std::string& block() const noexcept { return block_; }

 private:
  std::string block_;
};

/// The problem does not provide a capability (e.g. full gradients).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Missing or unreadable data file.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace ransom
