#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace monotraj {

enum class ErrorCode {
  invalid_input,
  degenerate_geometry,
  degenerate_scenario,
  too_few_observations,
  rank_deficient,
  numerical_failure,
  insufficient_dof,
  division_by_zero,
  indeterminate,
  schema_error,
  config_error,
  time_mismatch,
  io_error,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. `detail` carries a single integer payload where a
/// failure has one (the required minimum for too_few_observations, the
/// numerical rank for rank_deficient, the line number for schema_error).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<long> detail = std::nullopt)
      : std::runtime_error(message), code_(code), detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<long> detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::optional<long> detail_;
};

}  // namespace monotraj
