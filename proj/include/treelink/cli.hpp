#pragma once

namespace treelink {

// Entry point for the treelink command-line tool. Returns the process exit
// status: 0 on success, 1 on validation/configuration errors, 2 on numerical
// failure.
int run_cli(int argc, const char* const* argv);

}  // namespace treelink
