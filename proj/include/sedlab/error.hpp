#pragma once

#include <stdexcept>
#include <string>

namespace sedlab {

// Input outside the physical or mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// An iterative or adaptive numerical procedure failed to meet its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what, double partial = 0.0)
      : std::runtime_error(what), partial_(partial) {}
  double partial() const { return partial_; }

 private:
  double partial_;
};

}  // namespace sedlab
