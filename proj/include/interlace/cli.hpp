#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace interlace::cli {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitNotConverged = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kToolVersion = "0.1.0";

/// Entry point of the `interlace` tool. Subcommands: haar, decompose, apply,
/// calibrate, experiment. Returns 0 on success / convergence, 1 when an
/// optimization missed its target loss, 2 on usage or I/O errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace interlace::cli
