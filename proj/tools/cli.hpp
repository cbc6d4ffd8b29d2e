#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace foothold::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

/// args excludes the program name. Every subcommand writes one run manifest.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace foothold::cli
