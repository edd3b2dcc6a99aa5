#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace revassist::text {

// Replaces every invalid UTF-8 sequence with U+FFFD.
std::string sanitize_utf8(std::string_view input);

// Number of code points in a valid UTF-8 string.
std::size_t utf8_length(std::string_view input);

// Splits on '\n'. A trailing newline does not produce a final empty element.
std::vector<std::string> split_lines(std::string_view input);

std::string_view trim(std::string_view s);
std::string_view trim_right(std::string_view s);

std::string to_lower(std::string_view s);

bool contains_ci(std::string_view haystack, std::string_view needle);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Reads a whole file; throws std::runtime_error when it cannot be opened.
std::string read_file(const std::string& path);

}  // namespace revassist::text
