#pragma once

namespace segwave {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitInput = 2, kExitInternal = 3 };

// Subcommands: segment, simulate, bench, select-beta, spectrogram.
// Diagnostics go to stderr; machine output only to the declared files.
int cli_main(int argc, const char* const* argv);

}  // namespace segwave
