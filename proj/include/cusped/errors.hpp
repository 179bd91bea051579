#pragma once

#include <stdexcept>
#include <string>

namespace cusped {

// Base of every error raised by the library. Each subclass names one failure
// mode so callers can catch precisely what they can recover from.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define CUSPED_DEFINE_ERROR(Name) \
  struct Name : Error {           \
    using Error::Error;           \
  }

CUSPED_DEFINE_ERROR(InvalidPoint);
CUSPED_DEFINE_ERROR(DegenerateChord);
CUSPED_DEFINE_ERROR(BaseMismatch);
CUSPED_DEFINE_ERROR(InvalidTriangle);
CUSPED_DEFINE_ERROR(NonTermination);
CUSPED_DEFINE_ERROR(NotUnimodular);
CUSPED_DEFINE_ERROR(Overflow);
CUSPED_DEFINE_ERROR(OutsideChart);
CUSPED_DEFINE_ERROR(StepUnderflow);
CUSPED_DEFINE_ERROR(CuspObstruction);
CUSPED_DEFINE_ERROR(EndpointMismatch);
CUSPED_DEFINE_ERROR(CuspMismatch);
CUSPED_DEFINE_ERROR(DomainError);
CUSPED_DEFINE_ERROR(ProjectionFailure);
CUSPED_DEFINE_ERROR(InvalidPlan);
CUSPED_DEFINE_ERROR(InsufficientData);
CUSPED_DEFINE_ERROR(ManifestMismatch);
CUSPED_DEFINE_ERROR(ConfigError);
CUSPED_DEFINE_ERROR(NotCauchy);

#undef CUSPED_DEFINE_ERROR

// Chord solver failure; carries the best iterate's residual.
struct NoConvergence : Error {
  NoConvergence(const std::string& what, double residual)
      : Error(what), residual(residual) {}
  double residual;
};

// No twist exponent up to the cap meets the angle budget.
struct AngleBudgetInfeasible : Error {
  AngleBudgetInfeasible(const std::string& what, double achieved)
      : Error(what), achieved_angle(achieved) {}
  double achieved_angle;
};

}  // namespace cusped
