#pragma once

#include <stdexcept>
#include <string>

namespace fleetsim {

/// Bad input: malformed files, out-of-range parameters, violated preconditions.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// The queue has no finite steady state (rho >= 1).
class UnstableQueueError : public ValidationError {
 public:
  explicit UnstableQueueError(const std::string& what) : ValidationError(what) {}
};

/// Internal state-machine inconsistency. Indicates a bug, not bad input.
class SimulationError : public std::runtime_error {
 public:
  explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fleetsim
