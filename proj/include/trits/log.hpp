#pragma once

#include <string>
#include <vector>

namespace trits {

/// Prints "warning: msg" to stderr and keeps a per-thread record of it.
void log_warning(const std::string& msg);

/// Returns and clears the warnings recorded on this thread.
std::vector<std::string> drain_warnings();

}  // namespace trits
