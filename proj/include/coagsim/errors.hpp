#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace coagsim {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A composition vector outside R^d_* (zero or negative entries).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical parameter outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

class CompactionError : public Error {
 public:
  using Error::Error;
};

class DegenerateKernelError : public Error {
 public:
  using Error::Error;
};

/// Picard iteration did not reach the tolerance; carries the observed ratios.
class NonContractionError : public Error {
 public:
  NonContractionError(const std::string& what, std::vector<double> ratios)
      : Error(what), ratios_(std::move(ratios)) {}
  const std::vector<double>& ratios() const noexcept { return ratios_; }

 private:
  std::vector<double> ratios_;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

class StiffnessError : public Error {
 public:
  using Error::Error;
};

/// Kernel exceeded its declared majorant during thinning.
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace coagsim
