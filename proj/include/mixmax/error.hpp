#pragma once

#include <stdexcept>
#include <string>

namespace mixmax {

/// Wrong vector length, group count or arity.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite gradients or objective values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A covariate where every group density vanishes, so the covariate-shift
/// mixture predictor is undefined.
class DegeneratePointError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Arguments outside an operation's domain (bad labels, empty groups, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace mixmax
