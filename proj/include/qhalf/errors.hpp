#pragma once

#include <stdexcept>
#include <string>

namespace qhalf {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can map them onto exit codes without knowing the details.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class SizeLimitError : public Error {
 public:
  using Error::Error;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// Raised when a radius or band is below what the grid can resolve.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

class DegenerateBlowUp : public Error {
 public:
  using Error::Error;
};

class NotConvergedError : public Error {
 public:
  using Error::Error;
};

/// Numeric search disagreed with the closed-form prediction.
class DiscrepancyError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qhalf
