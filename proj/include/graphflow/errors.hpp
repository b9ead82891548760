#pragma once

#include <stdexcept>
#include <string>

namespace graphflow {

enum class ErrorCode {
  invalid_argument,
  parse_error,
  invalid_graph,
  not_irreducible,
  no_convergence,
  dimension_mismatch,
  cfl_violation,
  series_diverging,
  system_singular,
  quadrature_overflow,
  zero_mass,
  insufficient_data,
  io_error,
};

/// Single exception type carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

const char* error_code_name(ErrorCode code);

}  // namespace graphflow
