#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "morphbench/evaluator.hpp"
#include "morphbench/trainer.hpp"

namespace morphbench {

enum class MetricKind { precision, recall, f1 };

// One architecture family's contribution to the comparison document. A
// failed run keeps its error message and renders as dashes.
struct FamilyResult {
  std::string family;
  bool ok = false;
  std::string error;
  TrainLog log;
  MetricsReport metrics;
};

// Aligned-text comparison table for one metric: a column per family, a row
// per question, and the Weighted Average footer. Values print to three
// decimals; in every row the best value(s) are wrapped *like this* and,
// when any value is strictly lower, the worst value(s) are wrapped
// _like this_. Ties mark every holder; best/worst compare the printed
// (rounded) values so the marks always agree with what the table shows.
// Failed families and support-0 rows render as dashes and do not compete.
std::string render_metric_table(MetricKind kind, const std::vector<FamilyResult>& results);

// Per-family epochs, stop reason and best validation epoch/loss. Carries no
// wall time, so its bytes are reproducible across runs.
std::string render_training_table(const std::vector<FamilyResult>& results);

// Per-family epochs and measured wall-clock hours (three decimals).
std::string render_timing(const std::vector<FamilyResult>& results);

// The full comparison document: header, configuration echo, training
// summary, the three metric tables, and a failure section when any family
// failed. Byte-identical for identical inputs; all wall-time figures live
// in the separate timing file instead.
std::string render_report(const std::vector<FamilyResult>& results,
                          const std::string& config_json);

// Writes under out_dir: report.txt, training.csv and
// metrics_{precision,recall,f1}.csv (all reproducible for a fixed seed),
// plus timing.txt (measured hours, varies run to run).
void save_report_files(const std::vector<FamilyResult>& results, const std::string& config_json,
                       const std::filesystem::path& out_dir);

// Rehydrates one family from a benchmark output directory
// (<dir>/<family>/metrics.csv and trainlog.json). Missing or unreadable
// files yield ok=false with the reason instead of throwing.
FamilyResult load_family_result(const std::filesystem::path& dir, const std::string& family,
                                const DecisionTreeSchema& schema);

}  // namespace morphbench
