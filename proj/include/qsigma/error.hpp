#pragma once

#include <stdexcept>
#include <string>

namespace qsigma {

enum class ErrorCode {
  kInvalidArgument = 1,
  kConfiguration = 2,
  kIo = 3,
  kContractViolation = 4,
  kNoSolution = 5,
};

// Every error raised by the core carries one of the codes above so the C layer
// can map it onto a status value without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

}  // namespace qsigma
