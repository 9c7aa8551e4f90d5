#ifndef VECOT_CLI_COMMANDS_HPP
#define VECOT_CLI_COMMANDS_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace vecot::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,
  kExitDiverged = 2,
  kExitIterationCap = 3,
};

/// Parses `args` (without the program name) and runs one command. Reports go
/// to `out`, warnings to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_main(int argc, char** argv);

}  // namespace vecot::cli

#endif  // VECOT_CLI_COMMANDS_HPP
