#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <string>
#include <system_error>
#include <type_traits>
#include <vector>

#include "pomdp/core.hpp"

// Minimal CSV emission with locale-independent formatting: doubles go through
// std::to_chars at 17 significant digits (round-trip exact), integers through
// std::to_chars base 10. No quoting; field values never contain commas here.

namespace pomdp {

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    if (res.ec != std::errc{}) fail("NonFinite", "could not format value");
    return std::string(buf, res.ptr);
}

template <typename T>
std::string format_integer(T v) {
    static_assert(std::is_integral_v<T>);
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary), columns_(header.size()) {
        if (!out_) fail("IoError", "cannot open " + path);
        if (header.empty()) fail("BadShape", "csv needs at least one column");
        write_cells(header);
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_) fail("BadShape", "csv row width mismatch");
        write_cells(cells);
    }

    static std::string cell(double v) { return format_double(v); }
    static std::string cell(std::size_t v) { return format_integer(v); }
    static std::string cell(int v) { return format_integer(v); }
    static std::string cell(bool v) { return v ? "1" : "0"; }

private:
    void write_cells(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
        if (!out_) fail("IoError", "csv write failed");
    }

    std::ofstream out_;
    std::size_t columns_;
};

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace pomdp
