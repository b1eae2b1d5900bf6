#include "spinn/common/error.hpp"

namespace spinn {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::InvalidShape: return "InvalidShape";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::InvalidOrder: return "InvalidOrder";
    case ErrorKind::PoleSingularity: return "PoleSingularity";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorKind::CholeskyFailure: return "CholeskyFailure";
    case ErrorKind::InvalidVariant: return "InvalidVariant";
    case ErrorKind::Instability: return "Instability";
    case ErrorKind::NonFiniteCoefficient: return "NonFiniteCoefficient";
    case ErrorKind::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorKind::FitDiverged: return "FitDiverged";
    case ErrorKind::MissingComponent: return "MissingComponent";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

bool is_config_error(ErrorKind kind) noexcept {
  return kind == ErrorKind::ConfigError || kind == ErrorKind::InvalidVariant ||
         kind == ErrorKind::InvalidShape || kind == ErrorKind::InvalidGrid ||
         kind == ErrorKind::IoError;
}

}  // namespace spinn
