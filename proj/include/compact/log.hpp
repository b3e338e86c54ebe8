#pragma once

#include <initializer_list>
#include <string>
#include <utility>

namespace compact {

// Line-delimited structured records on stderr:
//   level=info event=image_done image=img_001 accepted=9
void log_line(std::string_view level, std::string_view event,
              std::initializer_list<std::pair<std::string_view, std::string>> fields = {});

inline void log_info(std::string_view event,
                     std::initializer_list<std::pair<std::string_view, std::string>>
                         fields = {}) {
    log_line("info", event, fields);
}

inline void log_warn(std::string_view event,
                     std::initializer_list<std::pair<std::string_view, std::string>>
                         fields = {}) {
    log_line("warn", event, fields);
}

inline void log_error(std::string_view event,
                      std::initializer_list<std::pair<std::string_view, std::string>>
                          fields = {}) {
    log_line("error", event, fields);
}

}  // namespace compact
