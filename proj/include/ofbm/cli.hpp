#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ofbm {

/// Exit codes of the command-line front end.
enum class ExitCode : int { Ok = 0, Usage = 2, Model = 3, Data = 4, Internal = 5 };

/// Runs one ofbmkit invocation in-process. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Version banner: tool version, filter taps hash, RNG identifier.
std::string version_string();

}  // namespace ofbm
