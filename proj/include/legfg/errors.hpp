#pragma once

#include <stdexcept>
#include <string>

namespace legfg {

/// Root of all library errors. The C API maps each subclass to a status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed documents, out-of-range configuration, inconsistent logs.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

/// The linear system has a numerical nullspace and no damping to regularize it.
class GaugeDeficiencyError : public SolverError {
 public:
  GaugeDeficiencyError(int nullspace_dim, const std::string& what)
      : SolverError(what), nullspace_dim_(nullspace_dim) {}
  int nullspaceDimension() const { return nullspace_dim_; }

 private:
  int nullspace_dim_;
};

}  // namespace legfg
