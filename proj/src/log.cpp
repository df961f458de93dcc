#include "xtopics/log.hpp"

#include <cstdlib>
#include <cstring>
#include <mutex>

namespace xtopics::log {

namespace {

Level parse_env() {
  const char* v = std::getenv("XTOPICS_LOG");
  if (!v) return Level::Warn;
  if (std::strcmp(v, "debug") == 0) return Level::Debug;
  if (std::strcmp(v, "info") == 0) return Level::Info;
  if (std::strcmp(v, "warn") == 0) return Level::Warn;
  if (std::strcmp(v, "error") == 0) return Level::Error;
  if (std::strcmp(v, "off") == 0) return Level::Off;
  return Level::Warn;
}

Level g_level = parse_env();
std::mutex g_mutex;

const char* tag(Level lvl) {
  switch (lvl) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
    default: return "?";
  }
}

}  // namespace

Level level() { return g_level; }
void set_level(Level lvl) { g_level = lvl; }

void write(Level lvl, const std::string& msg) {
  if (lvl < g_level) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::fprintf(stderr, "[xtopics %s] %s\n", tag(lvl), msg.c_str());
}

}  // namespace xtopics::log
