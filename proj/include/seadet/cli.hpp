#pragma once

namespace seadet {

// Entry point for the seadet command line. Returns the process exit code:
// 0 on success, 1 on a runtime failure, 2 on a usage error.
int run_cli(int argc, char** argv);

}  // namespace seadet
