#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace thermident {

enum class ErrorCode {
  kSchema,      // malformed or invalid input document
  kInvalid,     // violated precondition or type invariant
  kDimension,   // vector/matrix sizes disagree
  kUnstable,    // simulation or discretization blew up
  kNumeric,     // numerical breakdown (singular system, lost definiteness)
  kIo,          // file system or parse failure
  kConfig,      // run configuration problem
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace thermident
