#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pdae {

enum class ErrorCode {
  dimension,
  singular_matrix,
  domain,
  constraint_not_onto,
  policy,
  inconsistent,
  multiplier_unavailable,
  not_affine,
  reaction_blow_up,
  reference_unreliable,
  config,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` tells callers (and the CLI
/// exit-status mapping) what went wrong.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) throw Error(code, msg);
}

}  // namespace pdae
