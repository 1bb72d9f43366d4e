#pragma once

#include <stdexcept>
#include <string>

namespace pgsa {

enum class ErrorKind {
  InvalidParams,
  ZeroMass,
  NonPositive,
  DivisionBlowup,
  NotConverged,
  MassNotSPD,
  OutOfSupport,
  RankDeficient,
  Degenerate,
  MissingGradients,
  ZeroVariance,
  DomainError,
  Config,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::ZeroMass: return "ZeroMass";
    case ErrorKind::NonPositive: return "NonPositive";
    case ErrorKind::DivisionBlowup: return "DivisionBlowup";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::MassNotSPD: return "MassNotSPD";
    case ErrorKind::OutOfSupport: return "OutOfSupport";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::MissingGradients: return "MissingGradients";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

/// Library exception. Every failure raised by pgsa carries a kind so callers
/// (the experiment runner in particular) can record and continue.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pgsa
