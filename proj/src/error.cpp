#include "kdeint/error.hpp"

#include <fmt/core.h>

namespace kdeint {

std::string_view
to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::invalid_parameter:
      return "INVALID_PARAMETER";
    case ErrorCode::size_error:
      return "SIZE_ERROR";
    case ErrorCode::dimension_mismatch:
      return "DIMENSION_MISMATCH";
    case ErrorCode::degenerate_density:
      return "DEGENERATE_DENSITY";
    case ErrorCode::degenerate_variance:
      return "DEGENERATE_VARIANCE";
    case ErrorCode::empty_sum:
      return "EMPTY_SUM";
    case ErrorCode::parse_error:
      return "PARSE_ERROR";
    case ErrorCode::io_error:
      return "IO_ERROR";
    case ErrorCode::unsupported:
      return "UNSUPPORTED";
    case ErrorCode::tolerance_not_reached:
      return "TOLERANCE_NOT_REACHED";
    case ErrorCode::window_violation:
      return "WINDOW_VIOLATION";
    case ErrorCode::missing_responses:
      return "MISSING_RESPONSES";
    case ErrorCode::all_candidates_invalid:
      return "ALL_CANDIDATES_INVALID";
    case ErrorCode::fixture_mismatch:
      return "FIXTURE_MISMATCH";
    case ErrorCode::check_failed:
      return "CHECK_FAILED";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& what)
  : std::runtime_error(what)
  , code_(code)
{}

DegenerateDensityError::DegenerateDensityError(std::size_t index, double value)
  : Error(ErrorCode::degenerate_density,
          fmt::format("leave-one-out density at index {} is {:.6g}, at or "
                      "below the degeneracy floor",
                      index,
                      value))
  , index_(index)
  , value_(value)
{}

ParseError::ParseError(std::size_t line, const std::string& what)
  : Error(ErrorCode::parse_error, fmt::format("line {}: {}", line, what))
  , line_(line)
{}

ToleranceError::ToleranceError(double achieved,
                               double requested,
                               const std::string& what)
  : Error(ErrorCode::tolerance_not_reached,
          fmt::format("{} (achieved error bound {:.3g}, requested {:.3g})",
                      what,
                      achieved,
                      requested))
  , achieved_(achieved)
  , requested_(requested)
{}

} // namespace kdeint
