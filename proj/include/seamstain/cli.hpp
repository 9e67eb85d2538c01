#pragma once

namespace seamstain {

// Entry point of the command-line tool. Returns 0 on success, 2 for invalid
// arguments or configuration, 1 for failures while running.
int run_cli(int argc, const char* const* argv);

}  // namespace seamstain
