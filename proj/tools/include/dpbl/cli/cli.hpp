#pragma once

#include <iosfwd>

namespace dpbl::cli {

/// Entry point of `dp-bilevel`. Returns the process exit code; usage errors
/// give 64.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Applies DP_BILEVEL_LOG (error, info or debug) to the stderr logger.
void configure_logging();

}  // namespace dpbl::cli
