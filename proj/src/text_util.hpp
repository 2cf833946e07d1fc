#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace llmdcd::detail {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Splits on '\n', stripping a trailing '\r' and dropping trailing empty lines.
std::vector<std::string> split_lines(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
/// Shortest round-trippable rendering of a double.
std::string format_double(double x);

}  // namespace llmdcd::detail
