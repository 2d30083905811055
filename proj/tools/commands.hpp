#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace potkit {

// Process exit status contract.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitNumerical = 4 };

// Runs one potkit invocation. argv[0] is ignored. Diagnostics and progress
// go to `err`; data goes to the --out file, or to `out` when none is given.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "a:b:step" (or a single value) into an inclusive grid.
std::vector<double> parse_p_grid(const std::string& text);
// "a:b" (or a single value) into the integers a..b.
std::vector<int> parse_K_grid(const std::string& text);

// Quotes an argument for a POSIX shell when it holds anything but
// unreserved characters.
std::string shell_quote(const std::string& arg);

}  // namespace potkit
