#pragma once

#include <stdexcept>
#include <string>

namespace treegauss {

enum class ErrorCode {
  kInvalidArgument,
  kCapExceeded,
  kNotHomogeneous,
};

// Single exception type for the library; the code lets front ends map
// failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline Error invalid_argument(const std::string& what) {
  return Error(ErrorCode::kInvalidArgument, what);
}

inline Error cap_exceeded(const std::string& what) {
  return Error(ErrorCode::kCapExceeded, what);
}

}  // namespace treegauss
