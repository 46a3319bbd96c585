#include "rbi/core/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace rbi::log {

namespace {

std::mutex g_mutex;
Sink g_sink;
std::atomic<int> g_level{static_cast<int>(Level::kInfo)};
std::atomic<std::size_t> g_warnings{0};

const char* tag(Level level) {
  switch (level) {
    case Level::kDebug: return "debug";
    case Level::kInfo: return "info";
    case Level::kWarn: return "warning";
    case Level::kError: return "error";
  }
  return "info";
}

}  // namespace

void set_level(Level level) { g_level = static_cast<int>(level); }

Level level() { return static_cast<Level>(g_level.load()); }

Sink set_sink(Sink sink) {
  std::lock_guard lock(g_mutex);
  std::swap(g_sink, sink);
  return sink;
}

void write(Level lvl, std::string_view message) {
  if (lvl == Level::kWarn) ++g_warnings;
  if (static_cast<int>(lvl) < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    g_sink(lvl, message);
    return;
  }
  fmt::print(stderr, "[{}] {}\n", tag(lvl), message);
}

std::size_t warning_count() { return g_warnings.load(); }

}  // namespace rbi::log
