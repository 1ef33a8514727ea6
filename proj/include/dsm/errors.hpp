#pragma once

#include <stdexcept>
#include <string>

namespace dsm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Consumers disagree on the shiftable load at the peak slot.
class NonUniformShiftable : public Error {
public:
  using Error::Error;
};

/// The load threshold cannot be met (too many shifters, no off-peak room).
class InfeasibleThreshold : public Error {
public:
  using Error::Error;
};

/// A consumer's extreme costs cannot be normalized into an index range.
class InfeasibleCap : public Error {
public:
  using Error::Error;
};

/// The target-cost program has no solution (caps too tight for m shifters).
class Infeasible : public Error {
public:
  using Error::Error;
};

/// An index update left the box [0, min(1, cap)].
class IndexOutOfBounds : public Error {
public:
  IndexOutOfBounds(const std::string& what, long period, int consumer, double value)
      : Error(what), period_(period), consumer_(consumer), value_(value) {}

  long period() const noexcept { return period_; }
  int consumer() const noexcept { return consumer_; }
  double value() const noexcept { return value_; }

private:
  long period_;
  int consumer_;
  double value_;
};

/// A consumer can lower its discounted cost by deviating.
class NotIC : public Error {
public:
  using Error::Error;
};

/// Equal-split peak reduction exceeds some consumer's shiftable load.
class InsufficientShiftable : public Error {
public:
  using Error::Error;
};

/// Scenario text could not be parsed.
class ParseError : public Error {
public:
  using Error::Error;
};

/// Scenario parsed but violates an invariant. `field()` is a JSON-pointer-like path.
class ValidationError : public Error {
public:
  ValidationError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

}  // namespace dsm
