#pragma once

#include <string>

#include "coarsen/csv.hpp"

namespace coarsen {

struct ChartSpec {
    std::string title;
    std::string x_column;
    std::string y_column;
    /// Rows sharing a value in this column form one polyline; empty for a single series.
    std::string series_column;
    bool log_x = false;
};

/// Self-contained SVG line chart with a logarithmic y axis. Rows whose y value
/// is not strictly positive (or not finite) are skipped.
std::string render_log_chart(const CsvTable& table, const ChartSpec& spec);

}  // namespace coarsen
