#ifndef AAUPOWER_ERROR_HPP
#define AAUPOWER_ERROR_HPP

#include <stdexcept>
#include <string>

namespace aaupower {

// Input that violates a documented precondition or invariant.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File content that does not match the expected schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative procedure failed to converge or diverged numerically.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A linear system (or fit) is rank deficient.
class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aaupower

#endif  // AAUPOWER_ERROR_HPP
