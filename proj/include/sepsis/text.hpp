#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sepsis::text {

/// Shortest decimal that reads back to the identical double.
std::string format_double(double v);

/// Fixed number of significant digits (17 is always round-trip safe).
std::string format_double(double v, int significant_digits);

/// Missing values become the empty string.
std::string format_cell(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string_view trim(std::string_view s);

/// Splits one CSV record. Handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv(std::string_view line);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace sepsis::text
