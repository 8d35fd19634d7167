#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace railsim {

using CsvRow = std::map<std::string, std::string>;

// Comma-separated text with a header row. `required` columns must be present.
// Blank lines and lines starting with '#' are skipped.
std::vector<CsvRow> parse_csv(std::string_view text, const std::vector<std::string>& required);

std::int64_t parse_int(const std::string& s);
double parse_double(const std::string& s);

// "HH:MM:SS" (hours may exceed 23) <-> seconds since midnight.
std::int64_t parse_hms(const std::string& s);
std::string format_hms(std::int64_t seconds);

std::string read_file(const std::string& path);
// Writes to a sibling temporary and renames it into place.
void write_file_atomic(const std::string& path, std::string_view contents);

// 64-bit FNV-1a, used for config fingerprints.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 1469598103934665603ULL);
std::string hex64(std::uint64_t v);

}  // namespace railsim
