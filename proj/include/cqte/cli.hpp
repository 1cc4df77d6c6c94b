#pragma once

namespace cqte {

//! Entry point of the command-line tool; returns the process exit code.
//! Subcommands: estimate, simulate, rerun.
int cli_run(int argc, const char* const* argv);

} // namespace cqte
