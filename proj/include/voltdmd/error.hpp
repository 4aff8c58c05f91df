#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace voltdmd {

/// Malformed, inconsistent or insufficient input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A rollout left the finite range or exceeded the divergence guard.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::int64_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}

  /// Index of the first offending state (0 is the initial condition).
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

}  // namespace voltdmd
