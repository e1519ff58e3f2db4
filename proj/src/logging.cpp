#include "reusable/logging.hpp"

#include <atomic>
#include <iostream>
#include <map>
#include <mutex>

namespace reusable::log {

namespace {
std::atomic<Level> g_level{Level::Warning};
std::mutex g_mutex;
std::map<std::string, std::size_t>& counts() {
  static std::map<std::string, std::size_t> c;
  return c;
}
}  // namespace

void set_level(Level l) { g_level = l; }
Level level() { return g_level; }

void info(const std::string& msg) {
  if (g_level > Level::Info) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[info] " << msg << '\n';
}

void warning(const std::string& msg) {
  if (g_level > Level::Warning) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[warning] " << msg << '\n';
}

void warning_once(const std::string& key, const std::string& msg) {
  bool first = false;
  {
    std::lock_guard lock(g_mutex);
    first = counts()[key]++ == 0;
  }
  if (first) warning(msg + " (further occurrences suppressed)");
}

std::size_t warning_count(const std::string& key) {
  std::lock_guard lock(g_mutex);
  auto it = counts().find(key);
  return it == counts().end() ? 0 : it->second;
}

}  // namespace reusable::log
