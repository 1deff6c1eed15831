#pragma once

// dmsim command line: bench, verify and microtest subcommands.

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace dmsync::cli {

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kUsage = 2 };

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Flat config file: one key=value per line, '#' comments. Keys are flag
/// names without the dashes; '_' and '-' are interchangeable.
/// Throws std::runtime_error on unreadable files or malformed lines.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path);

}  // namespace dmsync::cli
