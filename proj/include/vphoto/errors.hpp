#pragma once

#include <stdexcept>
#include <string>

namespace vphoto {

// Argument errors use std::invalid_argument directly. The types below cover
// the remaining failure kinds so callers (the CLI in particular) can map them
// onto exit codes.

struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IncompatibleModel : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidPairing : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A required model, ensemble or config file is absent.
struct MissingArtifact : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a sampled or requested parameter falls outside a filter domain
// at a point where the caller guaranteed it could not.
struct InvariantViolation : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace vphoto
