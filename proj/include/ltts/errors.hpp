#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ltts {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (|xi| > 1, h <= 0, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Incompatible shapes, orders or mode sizes.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// A dense allocation would exceed the configured entry cap.
class CapacityError : public Error {
public:
  using Error::Error;
};

/// Checked integer arithmetic overflowed.
class OverflowError : public Error {
public:
  using Error::Error;
};

/// A black-box or numerical kernel produced a non-finite value.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Input point lies outside the patch B(x0, r).
class OutOfPatchError : public Error {
public:
  OutOfPatchError(std::size_t coordinate, double offset)
      : Error("point outside patch at coordinate " + std::to_string(coordinate) +
              " (|x - x0| / r = " + std::to_string(offset) + ")"),
        coordinate_(coordinate), offset_(offset) {}

  std::size_t coordinate() const noexcept { return coordinate_; }
  double normalized_offset() const noexcept { return offset_; }

private:
  std::size_t coordinate_;
  double offset_;
};

} // namespace ltts
