#pragma once

#include <stdexcept>
#include <string>

namespace mobflow {

/// Base of every error raised by the library. The CLI maps subclasses to
/// exit codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define MOBFLOW_DEFINE_ERROR(Name)                                             \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string &what) : Error(#Name ": " + what) {}       \
  }

MOBFLOW_DEFINE_ERROR(SingularSystem);
MOBFLOW_DEFINE_ERROR(NoConvergence);
MOBFLOW_DEFINE_ERROR(BadExponent);
MOBFLOW_DEFINE_ERROR(SingularMobility);
MOBFLOW_DEFINE_ERROR(InvalidPath);
MOBFLOW_DEFINE_ERROR(MassMismatch);
MOBFLOW_DEFINE_ERROR(StepRejected);
MOBFLOW_DEFINE_ERROR(CflViolation);
MOBFLOW_DEFINE_ERROR(GridMismatch);
MOBFLOW_DEFINE_ERROR(InvalidArgument);
MOBFLOW_DEFINE_ERROR(IoError);

#undef MOBFLOW_DEFINE_ERROR

} // namespace mobflow
