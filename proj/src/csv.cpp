#include "coarsen/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace coarsen {

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void CsvTable::add_row(std::vector<std::string> row) {
    if (row.size() != header.size()) {
        throw std::logic_error("row width " + std::to_string(row.size()) + " does not match header of " +
                               name);
    }
    rows.push_back(std::move(row));
}

std::size_t CsvTable::column(const std::string& label) const {
    const auto it = std::find(header.begin(), header.end(), label);
    if (it == header.end()) throw std::out_of_range("no column '" + label + "' in " + name);
    return static_cast<std::size_t>(it - header.begin());
}

namespace {

void write_line(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) out << ',';
        out << cells[k];
    }
    out << '\n';
}

}  // namespace

void CsvTable::write(std::ostream& out) const {
    write_line(out, header);
    for (const auto& row : rows) write_line(out, row);
}

std::string CsvTable::str() const {
    std::ostringstream out;
    write(out);
    return out.str();
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (first) {
            table.header = std::move(cells);
            first = false;
        } else {
            table.add_row(std::move(cells));
        }
    }
    return table;
}

}  // namespace coarsen
