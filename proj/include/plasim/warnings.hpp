#pragma once

#include <functional>
#include <string>

namespace plasim {

using WarnHandler = std::function<void(const std::string&)>;

// Install a process-wide warning sink; returns the previous one. Passing an
// empty function restores the default (a "plasim: warning:" line on stderr).
WarnHandler set_warning_handler(WarnHandler handler);

void warn(const std::string& message);

} // namespace plasim
