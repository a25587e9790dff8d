#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace recur::cli {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Parses "a,b,c" or "start:stop:step" (inclusive of stop when it lies on the
/// grid). Throws Error(InvalidConfig) on malformed or non-positive steps.
std::vector<double> parse_time_grid(const std::string& text);

/// Runs one subcommand. Errors are reported on `err` as a one-line JSON
/// object `{"error","message","exit_code"}` and mapped to an exit code.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload for tests: argv[0] is supplied.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace recur::cli
