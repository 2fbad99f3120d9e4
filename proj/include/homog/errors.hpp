#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace homog {

/// Base of every error raised by the library. The exit code is what the
/// `homog` tool returns when the error escapes a subcommand.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Malformed input: schema violations, unparsable expressions, bad flags.
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Expression syntax error. `position()` is the 1-based byte column of the
/// offending character (one past the end for unexpected end of input).
class SyntaxError : public ConfigError {
 public:
  SyntaxError(const std::string& what, std::size_t position)
      : ConfigError(what + " at offset " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// A standing assumption of the model does not hold (nonpositive coefficient,
/// disconnected support, ...).
class HypothesisError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Iterative kernel failed to converge or an internal consistency check failed.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, double residual = 0.0)
      : Error(what), residual_(residual) {}
  int exit_code() const noexcept override { return 4; }
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace homog
