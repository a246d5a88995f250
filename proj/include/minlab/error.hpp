#pragma once

#include <stdexcept>
#include <string>

namespace minlab {

enum class Errc {
  unsupported_dimension,
  invalid_argument,
  domain_error,
  length_mismatch,
  zero_field,
  resolution,
  non_finite,
  regularization_required,
  not_converged,
  line_search_failure,
  extrapolation_unstable,
  config,
  io,
};

/// Returns true for error codes that describe bad input rather than a
/// numerical breakdown.
constexpr bool is_validation_error(Errc c) {
  switch (c) {
    case Errc::unsupported_dimension:
    case Errc::invalid_argument:
    case Errc::domain_error:
    case Errc::length_mismatch:
    case Errc::resolution:
    case Errc::regularization_required:
    case Errc::config:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace minlab
