#pragma once

#include <filesystem>
#include <string>

namespace acn::io {

/// Writes to a sibling temp file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Appends one line (a newline is added) and flushes.
void append_line(const std::filesystem::path& path, const std::string& line);

std::string read_file(const std::filesystem::path& path);

}  // namespace acn::io
