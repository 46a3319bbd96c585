#pragma once

#include <fmt/format.h>

#include <cstddef>
#include <functional>
#include <string_view>

namespace rbi::log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3 };

using Sink = std::function<void(Level, std::string_view)>;

void set_level(Level level);
Level level();
// Replaces the stderr sink; pass nullptr to restore it. Returns the old sink.
Sink set_sink(Sink sink);
void write(Level level, std::string_view message);
// Number of warnings emitted since start-up.
std::size_t warning_count();

template <typename... Args>
void info(fmt::format_string<Args...> f, Args&&... args) {
  write(Level::kInfo, fmt::format(f, std::forward<Args>(args)...));
}

template <typename... Args>
void warn(fmt::format_string<Args...> f, Args&&... args) {
  write(Level::kWarn, fmt::format(f, std::forward<Args>(args)...));
}

template <typename... Args>
void error(fmt::format_string<Args...> f, Args&&... args) {
  write(Level::kError, fmt::format(f, std::forward<Args>(args)...));
}

}  // namespace rbi::log
