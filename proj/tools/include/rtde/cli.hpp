#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace rtde {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitUsage = 2;

/// Runs one rtde invocation. `args` excludes the program name.
/// Returns 0 on success, 1 on a numerical failure, 2 on usage or I/O errors.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

/// Parses a flat key=value config file into (key, value) pairs in file order.
/// Blank lines and lines starting with '#' are skipped.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

} // namespace rtde
