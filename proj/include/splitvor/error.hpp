#pragma once

#include <stdexcept>
#include <string>

namespace splitvor {

/// A law or experiment configuration violates an assumption or the grammar.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The operation is not defined for this kind of input (e.g. enumerating
/// the leaf slots of an infinite-arity tree).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Monte Carlo estimation ran out of draws before reaching its precision.
/// Carries the best estimate obtained so far.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, double estimate, double std_error)
      : std::runtime_error(what), estimate_(estimate), std_error_(std_error) {}

  double estimate() const noexcept { return estimate_; }
  double std_error() const noexcept { return std_error_; }

 private:
  double estimate_;
  double std_error_;
};

/// Filesystem failure while reading or writing experiment files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace splitvor
