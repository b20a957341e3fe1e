#pragma once

#include <stdexcept>
#include <string>

namespace dclink {

// Precondition on the mathematical domain of an operation was violated
// (unstable system passed to a norm, invalid design parameters, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Evaluation hit a pole or a degenerate loop (1 + L == 0).
class SingularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Algorithmic failure: non-bracketing bisection, indefinite gramian,
// diverging simulation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid network / schedule / scenario configuration. `where` names the
// offending field, optionally prefixed by a line number.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

}  // namespace dclink
