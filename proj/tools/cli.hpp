#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xbench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// "xbench <semver> (feature order <hash>)".
std::string version_string();

/// Runs one command line (args excludes the program name). Diagnostics go to `err`
/// as a single line; results and summaries to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xbench::cli
