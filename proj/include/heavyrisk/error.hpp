#pragma once

#include <stdexcept>
#include <string>

namespace heavyrisk {

/// Violated precondition or type invariant on user-supplied parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested evaluation lies outside the region where a closed form is valid.
class PreAsymptoticError : public std::domain_error {
 public:
  explicit PreAsymptoticError(const std::string& what)
      : std::domain_error("pre-asymptotic regime: " + what) {}
};

/// Time outside Lambda = {t : lambda(t) > 0}, or other domain failures.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A model assumption required by an asymptotic formula does not hold.
class AssumptionViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too few tail observations for an empirical diagnostic.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or syntactically malformed experiment config.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace heavyrisk
