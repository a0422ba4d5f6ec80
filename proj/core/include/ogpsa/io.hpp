#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ogpsa::io {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Strict parse of a full string; "inf" / "-inf" / "nan" accepted. Throws
/// ConfigError on trailing garbage.
double parse_double(std::string_view text);
unsigned long long parse_unsigned(std::string_view text);

std::string_view trim(std::string_view text);
std::vector<std::string_view> split(std::string_view text, char sep);

/// Writes `content` to a sibling temp file then renames it over `path`, so
/// readers never observe a truncated file.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace ogpsa::io
