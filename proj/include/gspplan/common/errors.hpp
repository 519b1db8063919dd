#pragma once

#include <stdexcept>
#include <string>

namespace gspplan {

// Raised when a computation produces non-finite values or a solve fails its
// residual check. The CLI maps it to exit code 4.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or unreadable configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A required upstream artifact (dataset, checkpoint, trace) is absent (exit code 3).
class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gspplan
