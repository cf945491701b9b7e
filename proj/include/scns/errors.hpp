#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scns {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatch : public Error {
 public:
  GridMismatch() : Error("fields live on different grids") {}
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// A density sample below zero where the model requires ρ ≥ 0.
class NegativeDensity : public Error {
 public:
  NegativeDensity(std::size_t location, double value)
      : Error("negative density " + std::to_string(value) + " at collocation point " +
              std::to_string(location)),
        location_(location),
        value_(value) {}

  std::size_t location() const { return location_; }
  double value() const { return value_; }

 private:
  std::size_t location_;
  double value_;
};

/// Density-weighted mass matrix too ill-conditioned to invert (near vacuum).
class SingularMass : public Error {
 public:
  explicit SingularMass(double condition)
      : Error("density-weighted mass matrix is singular (condition estimate " +
              std::to_string(condition) + ")"),
        condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class ZeroField : public Error {
 public:
  ZeroField() : Error("field is identically zero") {}
};

class SymmetryViolation : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// Time window or time instant not covered by a trajectory record.
class WindowError : public Error {
 public:
  using Error::Error;
};

/// Solver gave up after exhausting its Δt-halving retries.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value; names the offending field and constraint.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, std::string constraint)
      : Error(field + ": " + constraint), field_(std::move(field)), constraint_(std::move(constraint)) {}
  const std::string& field() const { return field_; }
  const std::string& constraint() const { return constraint_; }

 private:
  std::string field_;
  std::string constraint_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace scns
