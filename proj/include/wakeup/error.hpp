#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wakeup {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A position lookup beyond the end of a schedule.
class OutOfSchedule : public Error {
 public:
  using Error::Error;
};

/// An exhaustive search would exceed its enumeration budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Malformed array file. `offset()` is the byte offset where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace wakeup
