#pragma once

#include <iosfwd>

namespace qprim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFlagError = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

/// Entry point of the `qprim` executable: train, integrate, marginalize, scan.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qprim::cli
