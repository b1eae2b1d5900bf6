#pragma once

#include <stdexcept>
#include <string>

namespace spinn {

/// Failure categories surfaced by the library. The CLI maps these onto exit codes.
enum class ErrorKind {
  DivisionByZero,
  DomainError,
  InvalidShape,
  ShapeMismatch,
  Diverged,
  RankDeficient,
  InvalidOrder,
  PoleSingularity,
  InvalidGrid,
  DegenerateTriangle,
  CholeskyFailure,
  InvalidVariant,
  Instability,
  NonFiniteCoefficient,
  TimeOutOfRange,
  FitDiverged,
  MissingComponent,
  ConfigError,
  IoError,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// True for failures caused by a bad configuration rather than by the numerics.
bool is_config_error(ErrorKind kind) noexcept;

}  // namespace spinn
