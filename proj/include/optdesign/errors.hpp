#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace optdesign {

/// Shape or size mismatch between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A pivot fell below the singularity tolerance while factoring.
struct SingularMatrixError : std::runtime_error {
  explicit SingularMatrixError(std::size_t pivot)
      : std::runtime_error("matrix is singular at pivot index " + std::to_string(pivot)),
        pivot_index(pivot) {}
  std::size_t pivot_index;
};

struct EmptyIntervalError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Lift-one path is undefined: the lifted coordinate already carries all mass.
struct DegeneratePathError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Model parameters outside the valid domain (e.g. non-increasing cumulative logits).
struct InvalidParameterError : std::domain_error {
  using std::domain_error::domain_error;
};

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Greedy rounding ran out of eligible indices before reaching the total.
struct StuckAllocationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Problem-config parsing or semantic validation failure (user error).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace optdesign
