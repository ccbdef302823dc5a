#pragma once

#include <spdlog/spdlog.h>

namespace stackelberg::log {

/// stderr logger whose level comes from STACKELBERG_LOG
/// (trace|debug|info|warn|error|off, default warn).
spdlog::logger& get();

}  // namespace stackelberg::log
