#pragma once

#include <cstddef>
#include <string>

namespace reusable::log {

enum class Level { Debug = 0, Info = 1, Warning = 2, Quiet = 3 };

void set_level(Level level);
Level level();

void info(const std::string& msg);
void warning(const std::string& msg);

/// Emits a warning only the first time `key` is seen in this process; repeat
/// occurrences are counted and available through warning_count().
void warning_once(const std::string& key, const std::string& msg);
std::size_t warning_count(const std::string& key);

}  // namespace reusable::log
