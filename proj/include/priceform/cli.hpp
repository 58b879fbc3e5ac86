#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace priceform {

/// One command-line invocation, arguments given without the program name.
///
/// Subcommands: simulate | reconstruct | stability | predict | verify.
/// Flags: --config PATH, --out DIR, --mode verification|assimilation,
/// --bc nonlocal|neumann, --parallel N; flags override the config file.
/// Progress goes to `out`, error text to `err`; data files land in the
/// output directory after all computation finishes.
///
/// Returns the process exit code: 0 success, 1 usage or configuration
/// error, 2 input parse error, 3 solver failure, 4 verification failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace priceform
