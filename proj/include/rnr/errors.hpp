#pragma once

#include <stdexcept>
#include <string>

namespace rnr {

// Exit-code contract used by the CLI:
//   2 config, 3 convergence, 4 singularity, 5 verification.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// status is one of NON_CONVERGED, PV_UNSTABLE, GRID_TOO_COARSE, CUTOFF_TOO_LOW.
struct ConvergenceError : std::runtime_error {
  std::string status;
  ConvergenceError(std::string st, const std::string& what)
      : std::runtime_error(st + ": " + what), status(std::move(st)) {}
};

struct SingularOverlap : std::runtime_error {
  SingularOverlap(const std::string& what)
      : std::runtime_error("SINGULAR_OVERLAP: " + what) {}
};

struct VerificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rnr
