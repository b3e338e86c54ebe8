#pragma once

#include <string>
#include <vector>

namespace compact {

std::string read_file(const std::string& path);

// Write-temp-then-rename so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

std::vector<std::string> read_lines(const std::string& path);

// FNV-1a 64 hex digest of the file bytes (manifest integrity hint).
std::string file_digest_hex(const std::string& path);
std::string content_digest_hex(const std::string& content);

}  // namespace compact
