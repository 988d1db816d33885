#pragma once

// Structured logging: one "key=value" line per event on stderr.

#include <atomic>
#include <initializer_list>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>

namespace bibmatch::logging {

enum class Level { Debug = 0, Info, Warn, Error, Off };

inline std::atomic<Level>& level() {
    static std::atomic<Level> lvl{Level::Info};
    return lvl;
}

inline void set_level(Level lvl) { level().store(lvl); }

inline const char* level_name(Level lvl) {
    switch (lvl) {
        case Level::Debug: return "debug";
        case Level::Info: return "info";
        case Level::Warn: return "warn";
        case Level::Error: return "error";
        default: return "off";
    }
}

inline std::string quote_if_needed(std::string_view value) {
    if (value.find_first_of(" \t\"=") == std::string_view::npos) return std::string(value);
    std::string out = "\"";
    for (char c : value) {
        if (c == '"' || c == '\\') out.push_back('\\');
        if (c == '\n') { out += "\\n"; continue; }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void log(Level lvl, std::string_view event,
                std::initializer_list<std::pair<std::string_view, std::string>> fields = {}) {
    if (lvl < level().load()) return;
    std::ostringstream line;
    line << "level=" << level_name(lvl) << " event=" << event;
    for (const auto& [key, value] : fields)
        line << ' ' << key << '=' << quote_if_needed(value);
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    std::cerr << line.str() << '\n';
}

inline void debug(std::string_view event,
                  std::initializer_list<std::pair<std::string_view, std::string>> fields = {}) {
    log(Level::Debug, event, fields);
}
inline void info(std::string_view event,
                 std::initializer_list<std::pair<std::string_view, std::string>> fields = {}) {
    log(Level::Info, event, fields);
}
inline void warn(std::string_view event,
                 std::initializer_list<std::pair<std::string_view, std::string>> fields = {}) {
    log(Level::Warn, event, fields);
}
inline void error(std::string_view event,
                  std::initializer_list<std::pair<std::string_view, std::string>> fields = {}) {
    log(Level::Error, event, fields);
}

} // namespace bibmatch::logging
