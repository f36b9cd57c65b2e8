#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace yamabe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An operation that needs grid derivatives was handed a model chart (or vice versa).
class UnsupportedChartError : public Error {
public:
  using Error::Error;
};

/// A metric (or class section) failed positive-definiteness at some node.
class DegenerateMetricError : public Error {
public:
  DegenerateMetricError(std::size_t node, const std::string& what)
      : Error("degenerate metric at node " + std::to_string(node) + ": " + what), node_(node) {}

  std::size_t node() const noexcept { return node_; }

private:
  std::size_t node_;
};

/// Non-positive input where a positive field is required (fractional powers, conformal factors).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Density weights of the operands do not combine as the operation requires.
class WeightError : public Error {
public:
  using Error::Error;
};

/// A section claimed to represent a conformal class does not have unit determinant.
class InvalidClassError : public Error {
public:
  using Error::Error;
};

/// det(c0 + t v) is not positive somewhere along a requested class path.
class PathRangeError : public Error {
public:
  using Error::Error;
};

/// A documented precondition (e.g. trace-freeness of a tangent direction) was violated.
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// Ensemble members are inconsistent (chart or conformal class mismatch).
class EnsembleError : public Error {
public:
  EnsembleError(std::size_t member, const std::string& what)
      : Error("ensemble member " + std::to_string(member) + ": " + what), member_(member) {}

  std::size_t member() const noexcept { return member_; }

private:
  std::size_t member_;
};

/// Shape mismatch between fields that must live on the same chart.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Snapshot / table I/O failure.
class IoError : public Error {
public:
  using Error::Error;
};

} // namespace yamabe
