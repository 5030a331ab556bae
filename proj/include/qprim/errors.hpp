#pragma once

#include <stdexcept>
#include <string>

namespace qprim {

// Numerical breakdown: degenerate normalization, non-finite loss, etc.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File-level failures: unreadable paths, malformed checkpoints or grids.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedVersionError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace qprim
