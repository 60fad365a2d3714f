#include "monotraj/error.hpp"

namespace monotraj {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::degenerate_geometry: return "degenerate_geometry";
    case ErrorCode::degenerate_scenario: return "degenerate_scenario";
    case ErrorCode::too_few_observations: return "too_few_observations";
    case ErrorCode::rank_deficient: return "rank_deficient";
    case ErrorCode::numerical_failure: return "numerical_failure";
    case ErrorCode::insufficient_dof: return "insufficient_dof";
    case ErrorCode::division_by_zero: return "division_by_zero";
    case ErrorCode::indeterminate: return "indeterminate";
    case ErrorCode::schema_error: return "schema_error";
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::time_mismatch: return "time_mismatch";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

}  // namespace monotraj
