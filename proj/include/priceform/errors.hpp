#pragma once

#include <stdexcept>
#include <string>

namespace priceform {

/// Failure classes surfaced by the library. The CLI maps these onto exit codes;
/// tests match on the code rather than the message text.
enum class ErrorCode {
  invalid_argument,
  out_of_domain,
  no_price,
  ambiguous_price,
  singular_system,
  incompatible_initial_datum,
  misaligned_transform,
  hopf_violation,
  price_escaped,
  shift_out_of_domain,
  incompatible_reconstruction,
  parse_error,
};

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

}  // namespace priceform
