#pragma once

// The sed_lab command line: subcommands rates, gmu, simulate, field-check,
// phase and fig1-overlay. Every run writes its data files and a manifest.json
// (parameters, seeds, SHA-256 of each output) under --out.
//
// Exit codes: 0 success, 2 domain or usage error, 3 numerical non-convergence,
// 1 anything else. Failures print one line to stderr:
//   sed_lab: error=<domain|usage|convergence|internal> reason=<text>

#include <string>
#include <vector>

namespace sedlab {

int run_cli(int argc, const char* const* argv);

// Building blocks, exposed for tests.
std::string sha256_hex(const std::string& bytes);
// %.17g; "inf", "-inf" and "nan" for non-finite values.
std::string format_real(double x);
// "lo:hi:n" -> n evenly spaced points including both ends.
std::vector<double> parse_grid(const std::string& spec);
// Writes through a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace sedlab
