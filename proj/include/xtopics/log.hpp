#pragma once

#include <cstdio>
#include <string>

namespace xtopics::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

// Level comes from the XTOPICS_LOG env var (debug|info|warn|error|off),
// default warn.
Level level();
void set_level(Level lvl);

void write(Level lvl, const std::string& msg);

inline void debug(const std::string& msg) { write(Level::Debug, msg); }
inline void info(const std::string& msg) { write(Level::Info, msg); }
inline void warn(const std::string& msg) { write(Level::Warn, msg); }
inline void error(const std::string& msg) { write(Level::Error, msg); }

}  // namespace xtopics::log
