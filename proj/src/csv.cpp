#include "dpd/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <system_error>

#include "dpd/error.hpp"

namespace dpd {

std::string format_number(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    if (value == 0.0) {
        return "0"; // folds -0
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string format_number(std::int64_t value) { return std::to_string(value); }
std::string format_number(std::uint64_t value) { return std::to_string(value); }

std::string csv_row(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += cells[i];
    }
    out += '\n';
    return out;
}

std::string csv_row(std::initializer_list<std::string_view> cells) {
    std::string out;
    bool first = true;
    for (std::string_view c : cells) {
        if (!first) {
            out += ',';
        }
        out += c;
        first = false;
    }
    out += '\n';
    return out;
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCategory::Io, "cannot open " + path.string() + " for writing");
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
        throw Error(ErrorCategory::Io, "write failed for " + path.string());
    }
}

} // namespace dpd
