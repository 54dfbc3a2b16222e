#pragma once

#include <string>

#include "sitsr/metrics/evaluate.hpp"

namespace sitsr {

/// Boxplot of per-sample MAE grouped by the three time-gap strata, emitted
/// as a standalone SVG. Empty strata are omitted from the plot and listed in
/// a footnote row instead.
void write_mae_boxplot_svg(const std::string& path, const ReportEntry& entry,
                           const std::string& title);

/// Aggregate metrics table (one row per stratum plus the overall row).
void write_metrics_table_csv(const std::string& path, const MetricsReport& report);

/// Series-length ablation table; meaningful when the report holds entries
/// for several N values.
void write_series_length_table_csv(const std::string& path, const MetricsReport& report);

}  // namespace sitsr
