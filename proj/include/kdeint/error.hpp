#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kdeint {

//! Stable error codes; the CLI prints `to_string(code)` on failure.
enum class ErrorCode
{
  invalid_parameter,
  size_error,
  dimension_mismatch,
  degenerate_density,
  degenerate_variance,
  empty_sum,
  parse_error,
  io_error,
  unsupported,
  tolerance_not_reached,
  window_violation,
  missing_responses,
  all_candidates_invalid,
  fixture_mismatch,
  check_failed,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

//! Raised when a contributing leave-one-out density falls at or below the floor.
class DegenerateDensityError : public Error
{
public:
  DegenerateDensityError(std::size_t index, double value);
  std::size_t index() const noexcept { return index_; }
  double value() const noexcept { return value_; }

private:
  std::size_t index_;
  double value_;
};

class ParseError : public Error
{
public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

//! Numerical integration could not reach the requested tolerance.
class ToleranceError : public Error
{
public:
  ToleranceError(double achieved, double requested, const std::string& what);
  double achieved() const noexcept { return achieved_; }
  double requested() const noexcept { return requested_; }

private:
  double achieved_;
  double requested_;
};

} // namespace kdeint
