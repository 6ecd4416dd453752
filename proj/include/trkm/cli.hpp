#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace trkm {

enum ExitCode : int { kExitOk = 0, kExitUnknown = 1, kExitUsage = 2, kExitData = 3, kExitNumeric = 4 };

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trkm
