#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "flapsim/config.hpp"

namespace flapsim::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kResultFormatVersion = 1;

enum ExitCode : int { kOk = 0, kConfigError = 1, kBlowUp = 2, kOptimizerFailure = 3 };

/// Header row plus one row per sample, 17 significant digits, '\n' after every line.
void write_trace_csv(std::ostream& out, const Trace& trace);
std::string trace_csv(const Trace& trace);

/// Rows of a trace CSV (header checked and skipped). Throws ConfigError on
/// malformed input.
std::vector<std::array<double, kTraceColumns>> read_trace_csv(std::istream& in);

/// gnuplot command file plotting the given CSV for one subcommand.
std::string plot_script(const std::string& command, const std::string& csv_name);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace flapsim::cli
