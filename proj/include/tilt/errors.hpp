#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace tilt {

// Every failure raised by the library derives from Error so callers can
// catch one type; the concrete types map onto the CLI exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error { using Error::Error; };

// geometry
class AntipodalInput : public Error { using Error::Error; };
class BehindCamera : public Error { using Error::Error; };

// warping
class EstimatorShapeMismatch : public Error { using Error::Error; };

// direction statistics
class EmptyInput : public Error { using Error::Error; };
class BinningMismatch : public Error { using Error::Error; };
class TooFewSamples : public Error { using Error::Error; };

// rectifier; carries the iterates reached before the abort
class AntipodalDrift : public Error {
 public:
  AntipodalDrift(const std::string& what, std::vector<double> trace, std::array<double, 3> last_e)
      : Error(what), trace(std::move(trace)), last_e(last_e) {}
  std::vector<double> trace;
  std::array<double, 3> last_e;
};

// losses
class GradientUndefined : public Error { using Error::Error; };
class EmptyMask : public Error { using Error::Error; };
class NoValidSamples : public Error { using Error::Error; };

// plane refinement
class EmptySeed : public Error { using Error::Error; };
class DegenerateInput : public Error { using Error::Error; };

// io
class FileError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class RangeError : public Error { using Error::Error; };

class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ValidationError : public Error { using Error::Error; };

}  // namespace tilt
