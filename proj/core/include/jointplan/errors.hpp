#pragma once

#include <stdexcept>
#include <string>

namespace jointplan {

// Base of every error raised by the library. Callers that only care about
// "something in jointplan failed" can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define JOINTPLAN_DEFINE_ERROR(Name)      \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

JOINTPLAN_DEFINE_ERROR(InvalidArgument);
JOINTPLAN_DEFINE_ERROR(InsufficientHistory);
JOINTPLAN_DEFINE_ERROR(HorizonMismatch);
JOINTPLAN_DEFINE_ERROR(DimensionMismatch);
JOINTPLAN_DEFINE_ERROR(NumericalFailure);
JOINTPLAN_DEFINE_ERROR(StateSpaceTooLarge);
JOINTPLAN_DEFINE_ERROR(DegenerateCondition);
JOINTPLAN_DEFINE_ERROR(EmptyConditioningSet);
JOINTPLAN_DEFINE_ERROR(InvalidSetSize);
JOINTPLAN_DEFINE_ERROR(InvalidIgnoreSize);
JOINTPLAN_DEFINE_ERROR(DivergenceError);
JOINTPLAN_DEFINE_ERROR(InvalidScenario);
JOINTPLAN_DEFINE_ERROR(InfeasiblePerturbation);
JOINTPLAN_DEFINE_ERROR(ParseError);

#undef JOINTPLAN_DEFINE_ERROR

}  // namespace jointplan
