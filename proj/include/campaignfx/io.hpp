#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace campaignfx::io {

/// Splits one CSV record. Handles double-quoted fields with "" escapes;
/// embedded newlines are not supported.
std::vector<std::string> split_csv(std::string_view line);

std::string csv_escape(std::string_view field);

/// Shortest round-trip representation of a double ("NA" for NaN).
std::string format_double(double v);
std::string format_optional(const std::optional<double>& v);

/// Reads all lines of a text file; throws Error(Io) when it cannot be opened.
std::vector<std::string> read_file_lines(const std::filesystem::path& path);

/// Writes text atomically-enough for batch use; throws Error(Io) on failure.
void write_file(const std::filesystem::path& path, std::string_view content);

std::string_view trim(std::string_view s) noexcept;

}  // namespace campaignfx::io
