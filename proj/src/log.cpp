#include "trits/log.hpp"

#include <iostream>

namespace trits {

namespace {
thread_local std::vector<std::string> t_warnings;
}

void log_warning(const std::string& msg) {
    std::cerr << "warning: " << msg << "\n";
    t_warnings.push_back(msg);
}

std::vector<std::string> drain_warnings() {
    std::vector<std::string> out;
    out.swap(t_warnings);
    return out;
}

}  // namespace trits
