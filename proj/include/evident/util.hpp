#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace evident {

// SHA-256 of arbitrary bytes, lowercase hex.
std::string sha256_hex(std::string_view data);

// Splits on '\n'; a trailing newline does not produce an extra empty element.
std::vector<std::string> split_lines(std::string_view text);

std::string join_lines(const std::vector<std::string>& lines);

std::string trim(std::string_view s);

std::string to_lower(std::string_view s);

bool contains_ci(std::string_view haystack, std::string_view needle);

bool starts_with(std::string_view s, std::string_view prefix);

// Replaces invalid UTF-8 sequences with '?', leaves valid text untouched.
std::string sanitize_utf8(std::string_view bytes);

// Shell-style pattern match supporting '*' and '?' (no character classes).
bool glob_match(std::string_view pattern, std::string_view name);

// Reads a whole file as bytes; raises io_error / not_found.
std::string read_file_bytes(const std::string& path);

// Atomic full-file write: temp file in the same directory, then rename.
void write_file_atomic(const std::string& path, std::string_view content);

// Current UTC time, ISO-8601 with seconds precision.
std::string iso8601_now();

// Fixed-point formatting with the given number of decimals (e.g. "66.67").
std::string format_fixed(double value, int decimals);

}  // namespace evident
