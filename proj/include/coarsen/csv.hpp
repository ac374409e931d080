#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coarsen {

/// Shortest form that round-trips: 17 significant digits.
std::string format_double(double value);

/// In-memory CSV table. Rows are written with LF endings and no quoting; cells
/// must not contain commas.
struct CsvTable {
    std::string name;  ///< file stem, e.g. "sd_convergence"
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
    std::size_t column(const std::string& label) const;
    void write(std::ostream& out) const;
    std::string str() const;
};

/// Parses text produced by CsvTable::write.
CsvTable parse_csv(const std::string& text);

}  // namespace coarsen
