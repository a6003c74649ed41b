#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace citeforge {

// Thrown for unreadable inputs, unwritable outputs.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when input content violates its contract (bad format, bad config).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split(std::string_view s, char delim);
std::string trim(std::string_view s);

// One CSV record; handles double-quoted fields with "" escapes.
std::vector<std::string> parse_csv_line(std::string_view line);

// Shortest round-trip decimal rendering of a double (via std::to_chars).
std::string format_double(double v);

// Quantile with linear interpolation between order statistics
// (h = (n-1)p), values must be sorted ascending.
double quantile_sorted(const std::vector<double>& sorted, double p);

// FNV-1a 64-bit; used for content-addressed stage skipping.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ULL);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace citeforge
