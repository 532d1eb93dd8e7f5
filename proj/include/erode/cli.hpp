#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace erode {

/// Environment variable that overrides the default store path.
inline constexpr const char* kStoreEnvVar = "ERODE_STORE";
inline constexpr const char* kDefaultStorePath = "erode.store";

/// Runs the command line `args` (without the program name). Data goes to `out`,
/// diagnostics to `err`. Returns the process exit code: 0 on full success, 1 on a
/// data or I/O failure, 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace erode
