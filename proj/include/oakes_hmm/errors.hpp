#pragma once

#include <stdexcept>
#include <string>

namespace oakes_hmm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed user input: bad dimensions, out-of-range categories, empty data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A probability on the boundary of the simplex where a logit is required.
class BoundaryError : public Error {
 public:
  using Error::Error;
};

/// A response configuration with zero manifest probability under the model.
class DegenerateConfigError : public Error {
 public:
  using Error::Error;
};

/// A latent state with zero expected occupancy in the M-step.
class EmptyStateError : public Error {
 public:
  explicit EmptyStateError(const std::string& what, int state)
      : Error(what), state_(state) {}
  int state() const noexcept { return state_; }

 private:
  int state_;
};

/// Too many parametric-bootstrap replicates failed to fit.
class BootstrapUnreliableError : public Error {
 public:
  using Error::Error;
};

/// The brute-force or finite-difference reference could not be evaluated.
class OracleError : public Error {
 public:
  using Error::Error;
};

/// CSV ingestion failure; carries the 1-based row and column when known.
class IngestError : public InputError {
 public:
  IngestError(const std::string& what, long row = 0, long column = 0)
      : InputError(what), row_(row), column_(column) {}
  long row() const noexcept { return row_; }
  long column() const noexcept { return column_; }

 private:
  long row_;
  long column_;
};

}  // namespace oakes_hmm
