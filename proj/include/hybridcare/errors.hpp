#pragma once

#include <stdexcept>
#include <string>

namespace hybridcare {

/// Input rejected by a validation check (bad parameter, malformed config).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// No threshold (or threshold vector) keeps the total workload within capacity.
/// Carries the smallest attainable workload so callers can report it.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(double w_min, double capacity)
      : std::runtime_error("infeasible: minimal workload " + std::to_string(w_min) +
                           " exceeds capacity " + std::to_string(capacity)),
        w_min_(w_min),
        capacity_(capacity) {}

  double w_min() const noexcept { return w_min_; }
  double capacity() const noexcept { return capacity_; }

 private:
  double w_min_;
  double capacity_;
};

/// Estimation data does not pin down the requested parameters.
class IdentifiabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested operation is outside what the implementation supports (e.g. oracle size).
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hybridcare
