// CSV dialect shared by every output: comma separated, '.' decimal point,
// one header row, LF line endings. Numbers use the shortest representation
// that round-trips, so output is byte-stable across runs.
#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace dpd {

std::string format_number(double value);
std::string format_number(std::int64_t value);
std::string format_number(std::uint64_t value);

std::string csv_row(const std::vector<std::string>& cells);
std::string csv_row(std::initializer_list<std::string_view> cells);

// Writes `contents` to `path`, creating parent directories. Throws Error(Io).
void write_file(const std::filesystem::path& path, std::string_view contents);

} // namespace dpd
