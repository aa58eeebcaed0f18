#include "mfg/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

#include <cstdlib>
#include <string>

namespace mfg {

void configure_logging() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("mfg");
    logger->set_pattern("[mfg %l] %v");
    spdlog::set_default_logger(logger);
    const char* env = std::getenv("MFG_LOG");
    const std::string lvl = env ? env : "error";
    if (lvl == "debug") spdlog::set_level(spdlog::level::debug);
    else if (lvl == "info") spdlog::set_level(spdlog::level::info);
    else spdlog::set_level(spdlog::level::err);
    return true;
  }();
  (void)once;
}

}  // namespace mfg
