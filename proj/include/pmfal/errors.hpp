#pragma once

#include <stdexcept>
#include <string>

namespace pmfal {

// Exit-code mapping used by the CLI: validation errors -> 1, numerical -> 2.

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnreachablePoseError : ValidationError {
  using ValidationError::ValidationError;
};

struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AmbiguityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pmfal
