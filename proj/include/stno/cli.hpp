#pragma once

namespace stno {

/// Command-line entry point (run / validate / list-experiments / version).
/// Returns 0 on success, 1 on configuration or experiment failure, 2 on
/// command-line usage errors.
int cli_main(int argc, char** argv);

}  // namespace stno
