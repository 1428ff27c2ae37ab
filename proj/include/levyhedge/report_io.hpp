#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace levyhedge {

/// Shortest-safe decimal form: 17 significant digits, so parsing it back is exact.
std::string format_number(double x);

/// A missing cell (written empty) is a disengaged optional.
using CsvCell = std::optional<double>;

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<CsvCell>>& rows);

struct ChartSeries {
    std::string name;
    std::vector<double> y;
};

/// Static SVG line chart; non-finite points are skipped.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           std::span<const double> x, const std::vector<ChartSeries>& series);

void write_text(const std::string& path, const std::string& text);

}  // namespace levyhedge
