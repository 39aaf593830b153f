#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace mixkin::logging {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Threshold from MIXKINETIC_LOG in {error,warn,info,debug}; default warn.
inline Level threshold() {
  static Level lv = [] {
    const char* e = std::getenv("MIXKINETIC_LOG");
    if (!e) return Level::warn;
    if (!std::strcmp(e, "error")) return Level::error;
    if (!std::strcmp(e, "info")) return Level::info;
    if (!std::strcmp(e, "debug")) return Level::debug;
    return Level::warn;
  }();
  return lv;
}

inline void log(Level lv, const std::string& msg) {
  if (lv > threshold()) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[%s] %s\n", names[static_cast<int>(lv)], msg.c_str());
}

inline void error(const std::string& m) { log(Level::error, m); }
inline void warn(const std::string& m) { log(Level::warn, m); }
inline void info(const std::string& m) { log(Level::info, m); }
inline void debug(const std::string& m) { log(Level::debug, m); }

}  // namespace mixkin::logging
