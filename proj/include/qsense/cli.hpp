#pragma once

// Command-line front end. The executable is a thin wrapper around run().

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace qsense::cli {

enum ExitCode : int {
  kOk = 0,
  kRuntime = 1,
  kUsage = 2,
  kIo = 3,
  kFormat = 4,
  kBudget = 5,
  kValidation = 6,
};

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

using Config = std::map<std::string, std::string>;

/// Flat key=value text; '#' starts a comment, blank lines are ignored.
/// Throws InvalidArgument on a malformed line or a repeated key.
Config parse_config(const std::string& text);
/// Throws IoError when the file cannot be read.
Config load_config(const std::string& path);

inline constexpr int kSchemaVersion = 1;

}  // namespace qsense::cli
