#pragma once

#include <functional>
#include <string>

namespace iface {

enum class LogLevel { info, warning };

using LogSink = std::function<void(LogLevel, const std::string&)>;

/// Replace the process-wide log sink (default writes to stderr). Returns the
/// previous sink.
LogSink set_log_sink(LogSink sink);

void log_info(const std::string& msg);
void log_warning(const std::string& msg);

}  // namespace iface
