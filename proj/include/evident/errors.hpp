#pragma once

#include <stdexcept>
#include <string>

namespace evident {

// Stable error vocabulary; mirrored one-to-one by the C API status codes.
enum class ErrorCode : int {
  ok = 0,
  boundary_violation = 1,   // iteration contract broken (mismatched/duplicate)
  duplicate_entry = 2,
  budget_exhausted = 3,
  precondition = 4,
  broken_recipe = 5,
  structural_error = 6,     // unbalanced conditionals etc.; carries a line number
  broken_archive = 7,
  unsupported_format = 8,
  missing_member = 9,
  path_escape = 10,
  encoding_mismatch = 11,
  io_error = 12,
  not_found = 13,
  invalid_token = 14,
  transport = 15,
  driver_unavailable = 16,
  malformed_turn = 17,
  config_error = 18,
  inspection_error = 19,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, int line = -1)
      : std::runtime_error(std::move(message)), code_(code), line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  // 1-based input line for structural errors, -1 when not applicable.
  int line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  int line_;
};

[[noreturn]] inline void raise(ErrorCode code, std::string message, int line = -1) {
  throw Error(code, std::move(message), line);
}

}  // namespace evident
