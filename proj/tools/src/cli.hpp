#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace oxdr::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitInvalid = 3;

/// Environment variable naming the directory relative output paths resolve
/// against.
inline constexpr const char* kOutputDirEnv = "OXDR_OUTPUT_DIR";

/// Runs the tool. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace oxdr::cli
