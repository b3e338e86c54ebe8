#include "compact/log.hpp"

#include <iostream>
#include <mutex>
#include <sstream>

namespace compact {

namespace {
std::mutex log_mutex;

bool needs_quotes(const std::string& value) {
    return value.find_first_of(" \t\"=") != std::string::npos || value.empty();
}
}  // namespace

void log_line(std::string_view level, std::string_view event,
              std::initializer_list<std::pair<std::string_view, std::string>> fields) {
    std::ostringstream line;
    line << "level=" << level << " event=" << event;
    for (const auto& [key, value] : fields) {
        line << ' ' << key << '=';
        if (needs_quotes(value)) {
            line << '"';
            for (char ch : value) {
                if (ch == '"' || ch == '\\') line << '\\';
                line << ch;
            }
            line << '"';
        } else {
            line << value;
        }
    }
    std::lock_guard<std::mutex> lock(log_mutex);
    std::cerr << line.str() << '\n';
}

}  // namespace compact
