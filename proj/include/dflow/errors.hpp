#pragma once

#include <stdexcept>
#include <string>

namespace dflow {

// Bad user-supplied configuration (CLI flags, config files, model specs).
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numeric failure at runtime: divergence during simulation or training,
// singular Jacobians, integrator breakdown. CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem and parsing failures. CLI exit code 4.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal precondition was violated by the caller. Points at a bug in
// calling code rather than bad user input.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace dflow
