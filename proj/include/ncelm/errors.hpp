#pragma once

#include <stdexcept>
#include <string>

namespace ncelm {

/// Malformed input data: unreadable files, bad cells, shape mismatches.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid hyperparameters or configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear system that should be SPD (or a Woodbury inner matrix) could not
/// be factored.
class NumericalDegeneracy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ncelm
