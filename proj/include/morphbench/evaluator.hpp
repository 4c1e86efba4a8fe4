#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "morphbench/catalog.hpp"
#include "morphbench/dirichlet.hpp"
#include "morphbench/image.hpp"
#include "morphbench/model.hpp"

namespace morphbench {

// Monte-Carlo prediction for one galaxy: stochastic passes, their mean
// expected fractions, and the per-question discrete choice.
struct PredictionRecord {
  std::string id;
  std::vector<ConcentrationVector> passes;
  std::vector<double> mean_fractions;  // flat over slots; simplex per question
  std::vector<int> discrete;           // winning slot per question
};

struct GroundTruth {
  std::string id;
  std::vector<int> labels;  // winning slot per question, -1 when unanswered
};

struct QuestionMask {
  std::string id;
  std::vector<char> included;  // per question
};

struct OptionMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;  // galaxies whose true label is this option
};

struct QuestionMetrics {
  std::string question_id;
  std::vector<OptionMetrics> options;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  int support = 0;  // evaluated (masked, labeled) galaxies
};

struct MetricsReport {
  std::vector<QuestionMetrics> questions;
  double overall_precision = 0.0;  // weighted by question support
  double overall_recall = 0.0;
  double overall_f1 = 0.0;
  std::string model_label;
  int passes = 5;
  double threshold = 0.5;
  // A zero TP+FP or P+R denominator was reported as 0 somewhere (footnoted).
  bool zero_denominator_hit = false;
};

struct EvalOptions {
  int passes = 5;
  double threshold = 0.5;  // question applicability cut, inclusive
  uint64_t seed = 0;
  std::string model_label;
  bool augment_views = true;  // fresh augmentation per pass (center crop when off)
};

// `passes` forward evaluations in mc-dropout mode, each with a fresh
// augmentation of the stored image (or the deterministic center crop when
// augment_views is off); randomness derives from (seed, galaxy id) so
// distinct galaxies are independent and reruns reproduce. The mean fractions
// average the per-pass expected fractions (a mean of per-question simplex
// points stays on the simplex) and feed the discrete choice.
PredictionRecord predict(ModelRuntime& runtime, ParameterSet& params, const GalaxyRecord& rec,
                         const DecisionTreeSchema& schema, ImageStore& store, int passes,
                         uint64_t seed, bool augment_views = true);

// Argmax per question, ties to the lowest slot index. Returns the winning
// slot of each question.
std::vector<int> discretize(std::span<const double> fractions, const DecisionTreeSchema& schema);

// Questions asked of at least `threshold` of this galaxy's volunteers
// (inclusive); the root is always included.
std::vector<char> question_mask(const GalaxyRecord& rec, double threshold,
                                const DecisionTreeSchema& schema);

// Volunteer-vote argmax per question; -1 silences questions nobody answered.
std::vector<int> ground_truth_labels(const GalaxyRecord& rec, const DecisionTreeSchema& schema);

// sum(value * support) / sum(support); 0 when total support is 0. This is
// the aggregation behind every Weighted Average row.
double support_weighted_mean(std::span<const double> values, std::span<const int> supports);

// One-vs-rest confusion over masked, labeled galaxies. Zero denominators
// score 0 and set the footnote flag. Throws when the three lists disagree on
// ids.
MetricsReport compute_metrics(const std::vector<PredictionRecord>& predictions,
                              const std::vector<GroundTruth>& truths,
                              const std::vector<QuestionMask>& masks,
                              const DecisionTreeSchema& schema);

struct EvalResult {
  std::vector<PredictionRecord> predictions;
  MetricsReport metrics;
};

// predict() over every record, then compute_metrics against the catalog's
// own votes.
EvalResult evaluate_catalog(const NetworkDescription& net, ParameterSet& params,
                            const Catalog& catalog, const EvalOptions& opts);

// "id,question,option,mean_fraction,discrete", one row per answer slot.
void save_predictions_csv(const std::filesystem::path& path,
                          const std::vector<PredictionRecord>& predictions,
                          const DecisionTreeSchema& schema);

// Per-question rows plus the Weighted Average footer.
void save_metrics_csv(const std::filesystem::path& path, const MetricsReport& report);

// Inverse of save_metrics_csv, for report assembly from persisted runs.
// Restores the per-question weighted rows and the overall row; per-option
// details are not persisted. Throws on malformed or misordered files.
MetricsReport load_metrics_csv(const std::filesystem::path& path,
                               const DecisionTreeSchema& schema);
std::string render_metrics_table(const MetricsReport& report);
void save_metrics_table(const std::filesystem::path& path, const MetricsReport& report);

}  // namespace morphbench
