#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include "kkmoe/errors.hpp"

namespace kkmoe {

/// Shortest string that round-trips the double exactly.
inline std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

/// Column-oriented CSV with a header row.
inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
    if (header.size() != columns.size())
        throw ConfigurationError("csv header/column count mismatch");
    std::ofstream out(path);
    if (!out) throw ConfigurationError("cannot write " + path);
    for (std::size_t c = 0; c < header.size(); ++c)
        out << (c ? "," : "") << header[c];
    out << '\n';
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << (c ? "," : "") << format_double(columns[c][r]);
        out << '\n';
    }
}

} // namespace kkmoe
