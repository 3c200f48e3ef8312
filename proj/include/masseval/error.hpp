#pragma once

#include <stdexcept>
#include <string>

namespace masseval {

/// Failure categories. Values double as CLI exit codes.
enum class ErrorKind {
  validation = 1,
  io = 2,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_validation(const std::string& what) {
  throw Error(ErrorKind::validation, what);
}

[[noreturn]] inline void throw_io(const std::string& what) { throw Error(ErrorKind::io, what); }

}  // namespace masseval
