#pragma once

#include <iosfwd>
#include <string_view>

namespace intent_graph {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitConfig = 2,
    kExitData = 3,
    kExitNumeric = 4,
};

/// Entry point of the `intent_graph` tool. Machine-readable results and
/// error documents go to `out`, human-readable summaries to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace intent_graph
