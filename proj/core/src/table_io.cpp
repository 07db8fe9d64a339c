#include "robgasp/table_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "robgasp/errors.hpp"

namespace robgasp {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

Table parse_table(std::istream& in, const std::string& source) {
    Table t;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(trim(line));
        std::vector<double> row(cells.size());
        bool numeric = true;
        for (std::size_t j = 0; j < cells.size(); ++j) numeric = numeric && parse_number(cells[j], row[j]);
        if (rows.empty() && t.names.empty() && !numeric) {
            t.names = cells;
            width = cells.size();
            continue;
        }
        if (width == 0) width = cells.size();
        if (cells.size() != width) {
            throw DataError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                            " columns, found " + std::to_string(cells.size()));
        }
        if (!numeric) {
            for (std::size_t j = 0; j < cells.size(); ++j) {
                double v;
                if (!parse_number(cells[j], v)) {
                    throw DataError(source + ":" + std::to_string(line_no) + ": non-numeric cell '" + cells[j] +
                                    "' in column " + std::to_string(j + 1));
                }
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError(source + ": no numeric rows");
    t.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < width; ++j) {
            t.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return t;
}

Table load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return parse_table(in, path);
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw DataError("cannot format number");
    return {buf, ptr};
}

void write_table(std::ostream& out, const Table& table) {
    if (!table.names.empty()) {
        if (static_cast<Eigen::Index>(table.names.size()) != table.data.cols()) {
            throw DataError("table header has " + std::to_string(table.names.size()) + " names for " +
                            std::to_string(table.data.cols()) + " columns");
        }
        for (std::size_t j = 0; j < table.names.size(); ++j) out << (j ? "," : "") << table.names[j];
        out << '\n';
    }
    for (Eigen::Index i = 0; i < table.data.rows(); ++i) {
        for (Eigen::Index j = 0; j < table.data.cols(); ++j) out << (j ? "," : "") << format_double(table.data(i, j));
        out << '\n';
    }
}

void write_table(const std::string& path, const Table& table) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_table(out, table);
}

}  // namespace robgasp
