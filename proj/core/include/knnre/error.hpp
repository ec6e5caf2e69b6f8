#pragma once

#include <stdexcept>
#include <string>

namespace knnre {

// Bad input: malformed files, violated type invariants, inconsistent
// arguments. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Failure while computing on already-validated inputs (dimension mismatch at
// query time, missing base row during prediction, ...). CLI exit code 2.
class ComputationError : public std::runtime_error {
 public:
  explicit ComputationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace knnre
