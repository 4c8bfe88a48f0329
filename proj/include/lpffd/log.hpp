#pragma once

#include <cstdlib>
#include <memory>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace lpffd {

// Library logger writing to stderr. Level comes from LPFFD_LOG
// (trace|debug|info|warn|error|off), default warn.
inline spdlog::logger& log() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("lpffd");
    l->set_level(spdlog::level::warn);
    if (const char* env = std::getenv("LPFFD_LOG")) l->set_level(spdlog::level::from_str(env));
    return l;
  }();
  return *logger;
}

}  // namespace lpffd
