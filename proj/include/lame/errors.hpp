#pragma once

#include <stdexcept>
#include <string>

namespace lame {

// Bad user input: unreadable files, malformed records, out-of-range ids.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent or unusable configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A checkpoint that does not fit the vocabulary, labels or model shape at hand.
class CompatibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition of an in-process API. Signals a programming error.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

}  // namespace lame
