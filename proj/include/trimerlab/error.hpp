#pragma once

#include <stdexcept>
#include <string>

namespace trimerlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the domain of an operation (bad config, bad window, r = 0 on a pure potential).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class SingularInput : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class PreconditionError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class UnsupportedSector : public Error {
 public:
  using Error::Error;
};

class MeshResolutionError : public Error {
 public:
  using Error::Error;
};

/// An iterative method failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Channel continuation lost track of a channel (overlap below threshold).
class RelabelingError : public Error {
 public:
  RelabelingError(const std::string& what, double R, double overlap)
      : Error(what), R_(R), overlap_(overlap) {}
  double R() const { return R_; }
  double overlap() const { return overlap_; }

 private:
  double R_;
  double overlap_;
};

/// Radial domain too small to hold the requested states.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A least-squares fit could not be set up or is ill-conditioned.
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace trimerlab
