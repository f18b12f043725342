#pragma once

// Numeric CSV input for the command-line front end.

#include "moce/core.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace moce::io {

struct Table {
    Matrix values;
    std::vector<std::string> header;  ///< empty unless read with a header row
};

namespace detail {

inline std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line, char sep = ',')
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

} // namespace detail

/// Rows and columns in error messages are 1-based and count the header line.
inline Table read_numeric_csv(std::istream& in, bool header, const std::string& name = "csv")
{
    Table t;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0, width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split(line);
        if (header && lineno == 1) {
            t.header = std::move(cells);
            width = t.header.size();
            continue;
        }
        if (width == 0) width = cells.size();
        if (cells.size() != width)
            throw InvalidArgument(name + ": row " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                                  " columns, expected " + std::to_string(width));
        std::vector<double> row(width);
        for (std::size_t k = 0; k < width; ++k) {
            const std::string& c = cells[k];
            const char* end = c.data() + c.size();
            auto [ptr, ec] = std::from_chars(c.data(), end, row[k]);
            if (c.empty() || ec != std::errc() || ptr != end || !std::isfinite(row[k]))
                throw InvalidArgument(name + ": non-numeric value '" + c + "' at row " + std::to_string(lineno) +
                                      ", column " + std::to_string(k + 1));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidArgument(name + ": no data rows");
    t.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < width; ++k) t.values(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
    return t;
}

inline Table read_numeric_csv(const std::string& path, bool header)
{
    std::ifstream f(path);
    if (!f) throw InvalidArgument("cannot open '" + path + "'");
    return read_numeric_csv(f, header, path);
}

/// y may be a single column or a single row.
inline Vector as_response(const Table& t, const std::string& name)
{
    if (t.values.cols() == 1) return t.values.col(0);
    if (t.values.rows() == 1) return t.values.row(0).transpose();
    throw InvalidArgument(name + ": response must have one column, found " + std::to_string(t.values.cols()));
}

inline void write_matrix_csv(std::ostream& o, const Matrix& m, int digits = 17)
{
    char buf[48];
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.*g", digits, m(i, j));
            o << (j ? "," : "") << buf;
        }
        o << "\n";
    }
}

} // namespace moce::io
