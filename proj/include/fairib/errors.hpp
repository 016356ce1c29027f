#pragma once

#include <stdexcept>
#include <string>

namespace fairib {

/// Base class for every error this library raises on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A probability entry is more negative than the validation tolerance allows.
struct NegativeMass : Error {
  using Error::Error;
};

/// A distribution does not sum (or row-sum) to 1 within the input tolerance.
struct NotNormalized : Error {
  using Error::Error;
};

/// Some x symbol has zero marginal probability; the caller must prune it.
struct EmptySupport : Error {
  using Error::Error;
};

/// Conditioning event has (numerically) zero probability.
struct ConditionOnNull : Error {
  using Error::Error;
};

/// Vector arguments of mismatched length.
struct LengthMismatch : Error {
  using Error::Error;
};

/// Invalid parameter value (non-positive alpha, negative beta, bad sizes, ...).
struct BadParameter : Error {
  using Error::Error;
};

/// Encoder-update normalizer underflowed to zero: every cluster is dead.
struct DegenerateNormalizer : Error {
  using Error::Error;
};

/// File could not be read or written.
struct IoError : Error {
  using Error::Error;
};

/// A value that is impossible under correct arithmetic (e.g. strongly
/// negative mutual information); indicates a bug, not bad input.
struct InternalError : Error {
  using Error::Error;
};

}  // namespace fairib
