#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lipkit::io {

/// Writes to "<path>.tmp" then renames over path, so readers never observe
/// a half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string> split_lines(std::string_view text);

/// Shortest round-trip decimal representation ("%.17g" trimmed).
std::string format_number(double value);

}  // namespace lipkit::io
