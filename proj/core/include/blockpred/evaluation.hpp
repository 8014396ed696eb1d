#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "blockpred/checkpoint.hpp"
#include "blockpred/windowing.hpp"

namespace blockpred {

/// Binary confusion counts with blocked (1) as the positive class.
struct ConfusionMatrix {
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tp = 0;

  std::uint64_t total() const { return tn + fp + fn + tp; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Fraction of matching pairs. Throws LengthError / EmptyError.
double top1_accuracy(std::span<const int> preds, std::span<const int> truths);

/// Throws LengthError. Values other than 0/1 raise ValidationError.
ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths);

// Zero denominators yield 0.0.
double f1(const ConfusionMatrix& cm);
double precision(const ConfusionMatrix& cm);
double recall(const ConfusionMatrix& cm);
double accuracy(const ConfusionMatrix& cm);

struct MetricsReport {
  std::string scope;  // scenario id or "combined"
  int r_prime = 0;
  double top1_accuracy = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  ConfusionMatrix confusion;
  std::uint64_t support = 0;  // U

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport make_report(std::string scope, int r_prime, std::span<const int> preds,
                          std::span<const int> truths);

nlohmann::ordered_json to_json(const MetricsReport& r);
MetricsReport metrics_report_from_json(const nlohmann::json& j);
/// Serialized report.json text (array of reports, 2-space indent, trailing newline).
std::string reports_to_json_text(const std::vector<MetricsReport>& reports);
std::vector<MetricsReport> reports_from_json_text(const std::string& text);

/// Z x r features of a window: column t holds step t.
using SequenceFeatureFn = std::function<Eigen::MatrixXd(const SequenceSample&)>;

struct SweepEvaluation {
  std::vector<MetricsReport> reports;
  std::vector<std::filesystem::path> plots;
};

/// Evaluates each checkpoint on the test split of the same r'. Emits one
/// report per scenario present in the test split plus one "combined" report
/// per r', ordered by r' then scope. When `plot_dir` is set, writes report
/// plots there. Throws MissingSplitError when a checkpoint has no split.
SweepEvaluation evaluate_sweep(const std::map<int, Checkpoint>& checkpoints,
                               const std::map<int, DatasetSplit>& splits,
                               const SequenceFeatureFn& features,
                               const std::filesystem::path* plot_dir = nullptr);

}  // namespace blockpred
