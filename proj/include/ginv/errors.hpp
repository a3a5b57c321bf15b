#pragma once

#include <stdexcept>
#include <string>

namespace ginv {

// An iterative kernel (Jacobi SVD, ADMM) ran out of its iteration budget.
class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument to a builder or generator (shape mismatch, rank out of range).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A persisted file does not follow the expected JSON schema.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A persisted file parsed, but its contents fail a consistency check.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A subproblem solve inside an iterative method did not reach optimality.
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ginv
