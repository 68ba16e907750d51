#pragma once

#include <filesystem>

#include "mothscan/eval/sweep.hpp"

namespace mothscan::eval {

/// One row per curve point, empty cells for undefined metrics.
/// Columns: threshold, object_miss_rate, object_fppi, object_precision,
/// object_recall, object_f2, image_sensitivity, image_specificity,
/// image_precision, image_f2.
void write_curves_csv(const std::filesystem::path& path, const EvalReport& report);

/// Single row with the four scalar summaries.
void write_summary_csv(const std::filesystem::path& path, const EvalReport& report);

}  // namespace mothscan::eval
