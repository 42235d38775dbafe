#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace alloy {

enum class ErrorCode {
  domain = 1,
  index,
  sizing,
  geometry,
  degenerate_decomposition,
  invalid_potential,
  non_invertible_multiplier,
  torus_resonance,
  assumption_failure,
  non_convergence,
  provenance,
  reference_energy,
  config,
  io,
};

const char* error_code_name(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so that
// the C layer can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the eigensolver; keeps the largest off-diagonal element left when
// the iteration cap was hit.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& message, double worst_offdiagonal)
      : Error(ErrorCode::non_convergence, message), worst_(worst_offdiagonal) {}

  double worst_offdiagonal() const noexcept { return worst_; }

 private:
  double worst_;
};

// Config validation failure; `path` is a JSON-pointer-like field path.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(ErrorCode::config, path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace alloy
