#pragma once

#include <stdexcept>
#include <string>

namespace orbit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unsupported ProblemSpec, bad arguments.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Operation not defined for the given input (wrong group family, degree...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Numeric procedure could not reach a trustworthy verdict.
class InconclusiveError : public Error {
 public:
  using Error::Error;
};

/// A solver failed to produce a candidate.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace orbit
