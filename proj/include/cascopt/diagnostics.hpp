#pragma once

#include <functional>
#include <string>
#include <utility>

namespace cascopt {

// Process-wide sink for non-fatal warnings (weak-coupling, truncation,
// clamping, ...). Install once at startup; the default discards messages.
using WarningHandler = std::function<void(const std::string&)>;

inline WarningHandler& warning_handler() {
  static WarningHandler handler = [](const std::string&) {};
  return handler;
}

inline void set_warning_handler(WarningHandler h) { warning_handler() = std::move(h); }

inline void warn(const std::string& msg) { warning_handler()(msg); }

}  // namespace cascopt
