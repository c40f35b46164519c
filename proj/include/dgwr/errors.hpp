#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dgwr {

//! Stable error codes. The numeric values are the CLI exit statuses, so
//! never renumber existing entries.
enum class ErrorCode : int
{
  Input = 2,
  Config = 3,
  GammaZero = 4,
  DegenerateObjective = 5,
  InsufficientEffectiveSampleSize = 6,
  SingularMomentMatrix = 7,
  SelectionFailed = 8,
  ScoreUnavailable = 9,
  SingularJacobian = 10,
  DegenerateWeights = 11,
  Numerical = 12,
  Io = 13,
};

inline std::string_view
error_code_name(ErrorCode code)
{
  switch (code) {
    case ErrorCode::Input:
      return "InputError";
    case ErrorCode::Config:
      return "ConfigError";
    case ErrorCode::GammaZero:
      return "GammaZeroError";
    case ErrorCode::DegenerateObjective:
      return "DegenerateObjectiveError";
    case ErrorCode::InsufficientEffectiveSampleSize:
      return "InsufficientEffectiveSampleSize";
    case ErrorCode::SingularMomentMatrix:
      return "SingularMomentMatrix";
    case ErrorCode::SelectionFailed:
      return "SelectionFailed";
    case ErrorCode::ScoreUnavailable:
      return "ScoreUnavailable";
    case ErrorCode::SingularJacobian:
      return "SingularJacobian";
    case ErrorCode::DegenerateWeights:
      return "DegenerateWeights";
    case ErrorCode::Numerical:
      return "NumericalError";
    case ErrorCode::Io:
      return "IoError";
  }
  return "UnknownError";
}

//! Base exception for everything thrown by the library.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string& what)
    : std::runtime_error(what)
    , code_(code)
  {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_code_name(code_); }

private:
  ErrorCode code_;
};

//! Error raised while fitting one location; carries the location index so
//! batch callers can report which fit failed.
class LocationError : public Error
{
public:
  LocationError(ErrorCode code, std::size_t location, const std::string& what)
    : Error(code, "location " + std::to_string(location) + ": " + what)
    , location_(location)
  {}

  std::size_t location() const noexcept { return location_; }

private:
  std::size_t location_;
};

[[noreturn]] inline void
fail(ErrorCode code, const std::string& what)
{
  throw Error(code, what);
}

} // namespace dgwr
