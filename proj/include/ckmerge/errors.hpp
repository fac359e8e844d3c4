#pragma once

#include <stdexcept>
#include <string>

namespace ckmerge {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Container file is missing, unreadable, or could not be written.
struct IoError : Error {
  using Error::Error;
};

// Container bytes are malformed (bad magic, truncation, bad manifest).
struct FormatError : Error {
  using Error::Error;
};

// A value-level invariant is violated (non-finite tensor element, bad shape).
struct ValidationError : Error {
  using Error::Error;
};

// Merge weights do not form a convex combination.
struct WeightError : Error {
  using Error::Error;
};

struct EmptyInputError : Error {
  using Error::Error;
};

// Gram matrix not positive definite even after the jitter ladder.
struct NumericalError : Error {
  using Error::Error;
};

// Two observations share a lambda while the model assumes zero noise.
struct DuplicateError : Error {
  using Error::Error;
};

// Numeric input outside the formula's domain.
struct DomainError : Error {
  using Error::Error;
};

struct DivergenceError : Error {
  using Error::Error;
};

struct TrainingError : Error {
  using Error::Error;
};

}  // namespace ckmerge
