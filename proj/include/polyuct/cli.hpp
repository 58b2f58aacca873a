#pragma once

namespace polyuct {

/// Config-driven entry point behind the `polyuct` binary. Returns the
/// process exit code: 0 success, 2 config/validation failure, 3 resource
/// budget exhausted, 1 anything unexpected.
int run_cli(int argc, const char* const* argv);

}  // namespace polyuct
