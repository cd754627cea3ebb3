#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "painpipe/evaluation.hpp"

namespace painpipe::evaluation {

enum class ReportFormat { json, csv };

ReportFormat parse_report_format(const std::string& name);

/// Columns model, fold, mae, mse, accuracy; one row per fold and a final
/// AGGREGATE row. Numbers use 17 significant digits.
std::string to_csv(const MetricsReport& report);

/// Writes atomically. Throws IoError when the path is not writable.
void emit_report(const MetricsReport& report, ReportFormat format, const std::filesystem::path& path);

/// Reads a JSON report. A report may list no folds and carry only an
/// aggregate (published figures).
MetricsReport read_report(const std::filesystem::path& path);

/// Grouped bar chart: one panel per metric (MAE, MSE, Accuracy), one bar per
/// report, each bar labelled with its aggregate value printed as %.4f.
std::string comparison_svg(std::span<const MetricsReport> reports);
void emit_comparison_plot(std::span<const MetricsReport> reports, const std::filesystem::path& path);

}  // namespace painpipe::evaluation
