#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "blockpred/evaluation.hpp"

namespace blockpred {

/// Static SVG renderings of a report set:
///   f1_by_scenario_<r'>.svg  grouped F1 / accuracy bars per scope
///   sweep_combined.svg       combined accuracy and F1 against r'
///   confusion_<r'>.svg       2x2 heat map of the combined confusion matrix
/// Returns the written paths.
std::vector<std::filesystem::path> write_report_plots(const std::vector<MetricsReport>& reports,
                                                      const std::filesystem::path& dir);

std::string render_f1_bars(const std::vector<MetricsReport>& reports, int r_prime);
std::string render_sweep(const std::vector<MetricsReport>& reports);
std::string render_confusion(const MetricsReport& report);

}  // namespace blockpred
