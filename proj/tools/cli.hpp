#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace knnre::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kValidationError = 1;
inline constexpr int kComputationError = 2;

// Runs one `knnre <subcommand> ...` invocation. `args` excludes the program
// name. Environment: KNNRE_WORKERS (worker count), KNNRE_OUT_DIR (output
// directory when --out-dir is not given).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace knnre::cli
