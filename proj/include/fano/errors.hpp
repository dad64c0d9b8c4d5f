#pragma once

#include <stdexcept>
#include <string>

namespace fano {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unphysical site placement (two coupled sites closer than the configured minimum).
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or discretization.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& what, std::string diagnostics)
      : Error(what), diagnostics_(std::move(diagnostics)) {}
  const std::string& diagnostics() const { return diagnostics_; }

 private:
  std::string diagnostics_;
};

// Norm drift or other run-time failure of a propagator.
class NumericalInstability : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class OutsideBand : public Error {
 public:
  using Error::Error;
};

}  // namespace fano
