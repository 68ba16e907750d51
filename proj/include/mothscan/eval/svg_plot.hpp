#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mothscan/eval/sweep.hpp"

namespace mothscan::eval {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

/// Minimal self-contained SVG line chart; output is deterministic.
void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series);

/// The report's standard charts: miss rate vs FPPI, object and image
/// precision-recall, and F2 vs threshold at both levels.
void write_report_plots(const std::filesystem::path& dir, const EvalReport& report);

}  // namespace mothscan::eval
