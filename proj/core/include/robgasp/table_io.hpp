#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace robgasp {

/// Rectangular numeric table with optional column names.
struct Table {
    Eigen::MatrixXd data;
    std::vector<std::string> names;
};

/// Reads a comma-separated numeric table. A first line with any non-numeric cell is a header.
/// Throws DataError naming the line on ragged rows, bad cells or an empty file.
[[nodiscard]] Table load_table(const std::string& path);
[[nodiscard]] Table parse_table(std::istream& in, const std::string& source = "<stream>");

/// Writes values in shortest round-trip form.
void write_table(const std::string& path, const Table& table);
void write_table(std::ostream& out, const Table& table);

/// Shortest decimal representation that parses back to the same double.
[[nodiscard]] std::string format_double(double v);

}  // namespace robgasp
