#include "vertexflow/log.hpp"

#include <atomic>
#include <cstdio>

namespace vertexflow::log {

namespace {
std::atomic<Level> g_level{Level::info};

void emit(Level lvl, const char* tag, std::string_view msg) {
    if (lvl < g_level.load(std::memory_order_relaxed)) return;
    std::fprintf(stderr, "[%s] %.*s\n", tag, static_cast<int>(msg.size()), msg.data());
}

void emit(Level lvl, const char* tag, std::string_view topic, std::string_view msg) {
    if (lvl < g_level.load(std::memory_order_relaxed)) return;
    std::fprintf(stderr, "[%s] %.*s: %.*s\n", tag, static_cast<int>(topic.size()), topic.data(),
                 static_cast<int>(msg.size()), msg.data());
}
}  // namespace

void set_level(Level level) { g_level.store(level, std::memory_order_relaxed); }
Level level() { return g_level.load(std::memory_order_relaxed); }

void debug(std::string_view msg) { emit(Level::debug, "debug", msg); }
void info(std::string_view msg) { emit(Level::info, "info", msg); }
void warn(std::string_view msg) { emit(Level::warn, "warn", msg); }
void error(std::string_view msg) { emit(Level::error, "error", msg); }

void debug(std::string_view topic, std::string_view msg) { emit(Level::debug, "debug", topic, msg); }
void info(std::string_view topic, std::string_view msg) { emit(Level::info, "info", topic, msg); }
void warn(std::string_view topic, std::string_view msg) { emit(Level::warn, "warn", topic, msg); }
void error(std::string_view topic, std::string_view msg) { emit(Level::error, "error", topic, msg); }

}  // namespace vertexflow::log
