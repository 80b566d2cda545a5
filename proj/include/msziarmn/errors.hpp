#pragma once

#include <stdexcept>
#include <string>

namespace msz {

/// Bad input: malformed files, inconsistent configuration, violated preconditions.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arithmetic breakdown: impossible data under the model, non-finite posteriors.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace msz
