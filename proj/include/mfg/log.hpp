#pragma once

// Logging goes through spdlog's default stderr logger; the level is taken
// from MFG_LOG (error | info | debug, default error).

#include <spdlog/spdlog.h>

namespace mfg {

/// Applies MFG_LOG to the default logger and routes it to stderr. Idempotent.
void configure_logging();

}  // namespace mfg
