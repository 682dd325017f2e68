#pragma once

#include <stdexcept>
#include <string>

namespace melfun {

//! Violation of a mathematical precondition: inadmissible development point,
//! divergent moment, non-positive sample value, broken symmetry contract.
struct DomainError : std::domain_error
{
  using std::domain_error::domain_error;
};

//! A numerical routine failed to converge. Carries the last estimate and a
//! bound on its error so callers can decide whether to proceed anyway.
struct NumericError : std::runtime_error
{
  NumericError(const std::string& what, double estimate_, double error_bound_)
    : std::runtime_error(what)
    , estimate(estimate_)
    , error_bound(error_bound_)
  {
  }

  double estimate;
  double error_bound;
};

} // namespace melfun
