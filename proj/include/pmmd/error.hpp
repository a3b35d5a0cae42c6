#pragma once

#include <stdexcept>
#include <string>

namespace pmmd {

enum class ErrorCode {
  invalid_argument = 1,
  shape_mismatch = 2,
  cap_exceeded = 3,
  parse_error = 4,
  io_error = 5,
  numeric_error = 6,
};

// Every failure raised by the library carries one of the codes above so the
// C layer can map it onto a status value without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace pmmd
