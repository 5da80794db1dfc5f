#pragma once

namespace saddle {

// Batch front end. Subcommands: eig, constants, solve, sweep, zero-energy,
// fiber, check-gradients, check-assumptions, embed. Returns the process exit
// code: 0 success, 2 precondition/usage errors, 3 non-convergence.
int run_cli(int argc, const char* const* argv);

}  // namespace saddle
