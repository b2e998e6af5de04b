#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rotubes {

/// Base class of every domain error raised by the library. `kind()` is a
/// stable machine-readable tag used by the CLI when reporting failures.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define ROTUBES_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name, what) {}  \
  };

ROTUBES_DEFINE_ERROR(InvalidArgument)
ROTUBES_DEFINE_ERROR(NonSkewInput)
ROTUBES_DEFINE_ERROR(InvalidRotation)
ROTUBES_DEFINE_ERROR(DegenerateMean)
ROTUBES_DEFINE_ERROR(GridMismatch)
ROTUBES_DEFINE_ERROR(InvalidDof)
ROTUBES_DEFINE_ERROR(ZeroResidualColumn)
ROTUBES_DEFINE_ERROR(NoRoot)
ROTUBES_DEFINE_ERROR(NonMonotoneBracket)
ROTUBES_DEFINE_ERROR(ParseError)
ROTUBES_DEFINE_ERROR(NonRotationRow)
ROTUBES_DEFINE_ERROR(NonMonotoneTime)
ROTUBES_DEFINE_ERROR(IoError)

#undef ROTUBES_DEFINE_ERROR

/// Raised when a per-time covariance fails the positive-definiteness check.
class SingularCovariance : public Error {
 public:
  SingularCovariance(std::size_t index, double time)
      : Error("SingularCovariance",
              "covariance is singular at grid index " + std::to_string(index) +
                  " (t = " + std::to_string(time) + ")"),
        index_(index),
        time_(time) {}

  std::size_t index() const noexcept { return index_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t index_;
  double time_;
};

}  // namespace rotubes
