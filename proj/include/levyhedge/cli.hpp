#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace levyhedge {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,      // usage or configuration error
    kExitPrecondition = 2,  // market not well posed
    kExitNumerical = 3,   // non-convergence, or verification checks failed
};

/// Runs the command line front end. args[0] is the program name.
/// Subcommands: check, optimal-strategy, solve-affine, solve-exp, simulate, verify.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace levyhedge
