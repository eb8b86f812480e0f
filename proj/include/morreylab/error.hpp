#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace morreylab {

enum class ErrorKind {
  InvalidGeometry,
  InvalidArgument,
  RadiusTooSmall,
  EmptyRadiiSet,
  WrongCoverRadius,
  ExponentOrderViolation,
  NegativeTime,
  TimeOutOfRange,
  DegenerateFit,
  NonnegativityViolation,
  StepCollapse,
  TimesNotInTrajectory,
  WindowTooLate,
  BlowupInWindow,
  InsufficientEarlySamples,
  OutsideTubularNeighborhood,
  IterationDiverged,
  EmptyTrajectory,
  ParseError,
  ValidationError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidGeometry: return "InvalidGeometry";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::RadiusTooSmall: return "RadiusTooSmall";
    case ErrorKind::EmptyRadiiSet: return "EmptyRadiiSet";
    case ErrorKind::WrongCoverRadius: return "WrongCoverRadius";
    case ErrorKind::ExponentOrderViolation: return "ExponentOrderViolation";
    case ErrorKind::NegativeTime: return "NegativeTime";
    case ErrorKind::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::NonnegativityViolation: return "NonnegativityViolation";
    case ErrorKind::StepCollapse: return "StepCollapse";
    case ErrorKind::TimesNotInTrajectory: return "TimesNotInTrajectory";
    case ErrorKind::WindowTooLate: return "WindowTooLate";
    case ErrorKind::BlowupInWindow: return "BlowupInWindow";
    case ErrorKind::InsufficientEarlySamples: return "InsufficientEarlySamples";
    case ErrorKind::OutsideTubularNeighborhood: return "OutsideTubularNeighborhood";
    case ErrorKind::IterationDiverged: return "IterationDiverged";
    case ErrorKind::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace morreylab
