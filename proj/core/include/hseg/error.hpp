#pragma once

#include <stdexcept>
#include <string>

namespace hseg {

// Precondition violated by the caller (bad shapes, empty sets, zero frames).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Inconsistent configuration, e.g. embedding size differs from the guide set.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unsupported file contents.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The input admits no solution (e.g. no image with two instances to pair).
class UnsatisfiableInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hseg
