#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace autopersuade::io {

/// Formats a double so that parsing it back recovers the exact value.
std::string format_double(double x);

/// Strict full-token double parse. Throws ValidationError with `context`
/// in the message on garbage, empty fields, or trailing characters.
double parse_double(std::string_view token, const std::string& context);

/// Strict full-token integer parse.
long long parse_int(std::string_view token, const std::string& context);

/// Splits one CSV line on commas. No quoting: the artifact's CSV schemas
/// carry ids and numbers only, and loaders reject ids containing commas.
std::vector<std::string> split_csv_line(std::string_view line);

/// Reads a whole file; throws ValidationError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Splits text into lines, tolerating a trailing newline and CRLF endings.
std::vector<std::string> split_lines(std::string_view text);

/// Writes content atomically (temp file + rename within the same directory).
void write_file(const std::filesystem::path& path, std::string_view content);

/// Hex-encoded SHA-256 of a file's content.
std::string sha256_file(const std::filesystem::path& path);

/// Hex-encoded SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

/// Number of Unicode scalar values in a UTF-8 string (continuation bytes
/// are not counted).
std::int64_t utf8_length(std::string_view text);

}  // namespace autopersuade::io
