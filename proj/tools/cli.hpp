#pragma once

#include <iosfwd>

namespace opensoc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitOperational = 2;  // usage, backend, I/O on outputs
inline constexpr int kExitInputData = 3;    // unreadable or malformed inputs

/// Entry point shared by the binary and the in-process tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace opensoc::cli
