#include "morphbench/evaluator.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "morphbench/augment.hpp"
#include "morphbench/rng.hpp"

namespace morphbench {

double support_weighted_mean(std::span<const double> values, std::span<const int> supports) {
  if (values.size() != supports.size())
    throw std::invalid_argument("support_weighted_mean: length mismatch");
  double num = 0.0;
  int64_t den = 0;
  for (size_t i = 0; i < values.size(); ++i) {
    num += values[i] * supports[i];
    den += supports[i];
  }
  return den > 0 ? num / static_cast<double>(den) : 0.0;
}

PredictionRecord predict(ModelRuntime& runtime, ParameterSet& params, const GalaxyRecord& rec,
                         const DecisionTreeSchema& schema, ImageStore& store, int passes,
                         uint64_t seed, bool augment_views) {
  if (passes < 1) throw std::invalid_argument("predict needs at least one pass");
  const int width = runtime.network().output_width;
  if (width != schema.total_answers())
    throw std::invalid_argument("network output width does not match the schema slot count");
  const Image stored = store.get(rec.image_ref, kStoredSide);

  AugmentationSeedState aug(hash_str(hash_u64(seed, hash_str(0, "eval-augment")), rec.id));
  Rng dropout(hash_str(hash_u64(seed, hash_str(0, "eval-dropout")), rec.id));

  PredictionRecord out;
  out.id = rec.id;
  out.passes.reserve(static_cast<size_t>(passes));
  out.mean_fractions.assign(static_cast<size_t>(width), 0.0);
  for (int p = 0; p < passes; ++p) {
    const Image view = augment_views ? augment(stored, aug) : center_crop(stored, kInputSide);
    Tensor batch({1, 1, kInputSide, kInputSide});
    std::copy(view.pixels.begin(), view.pixels.end(), batch.ptr());
    const Tensor conc = runtime.forward(batch, params, RunMode::mc_dropout, &dropout);
    ConcentrationVector cv;
    cv.alpha.assign(conc.ptr(), conc.ptr() + width);
    const std::vector<double> f = expected_fractions(cv.alpha, schema);
    for (size_t s = 0; s < f.size(); ++s) out.mean_fractions[s] += f[s];
    out.passes.push_back(std::move(cv));
  }
  // Mean over passes of the per-pass expected fractions; a mean of
  // per-question simplex points stays on the simplex.
  for (double& v : out.mean_fractions) v /= static_cast<double>(passes);
  out.discrete = discretize(out.mean_fractions, schema);
  return out;
}

std::vector<int> discretize(std::span<const double> fractions,
                            const DecisionTreeSchema& schema) {
  std::vector<int> winners(static_cast<size_t>(schema.num_questions()));
  for (int q = 0; q < schema.num_questions(); ++q) {
    const int first = schema.first_slot(q);
    int best = first;
    for (int s = first + 1; s < first + schema.num_answers(q); ++s)
      if (fractions[static_cast<size_t>(s)] > fractions[static_cast<size_t>(best)]) best = s;
    winners[static_cast<size_t>(q)] = best;
  }
  return winners;
}

std::vector<char> question_mask(const GalaxyRecord& rec, double threshold,
                                const DecisionTreeSchema& schema) {
  std::vector<char> included(static_cast<size_t>(schema.num_questions()), 0);
  for (int q = 0; q < schema.num_questions(); ++q)
    included[static_cast<size_t>(q)] =
        (q == schema.root() || applicability_fraction(rec, q, schema) >= threshold) ? 1 : 0;
  return included;
}

std::vector<int> ground_truth_labels(const GalaxyRecord& rec, const DecisionTreeSchema& schema) {
  std::vector<int> labels(static_cast<size_t>(schema.num_questions()), -1);
  for (int q = 0; q < schema.num_questions(); ++q) {
    if (rec.question_totals[static_cast<size_t>(q)] == 0) continue;
    const int first = schema.first_slot(q);
    int best = first;
    for (int s = first + 1; s < first + schema.num_answers(q); ++s)
      if (rec.votes[static_cast<size_t>(s)] > rec.votes[static_cast<size_t>(best)]) best = s;
    labels[static_cast<size_t>(q)] = best;
  }
  return labels;
}

MetricsReport compute_metrics(const std::vector<PredictionRecord>& predictions,
                              const std::vector<GroundTruth>& truths,
                              const std::vector<QuestionMask>& masks,
                              const DecisionTreeSchema& schema) {
  if (predictions.size() != truths.size() || predictions.size() != masks.size())
    throw std::invalid_argument("compute_metrics: list length mismatch");
  for (size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i].id != truths[i].id || predictions[i].id != masks[i].id)
      throw std::invalid_argument("compute_metrics: id mismatch at index " + std::to_string(i) +
                                  " (" + predictions[i].id + ")");

  MetricsReport report;
  std::vector<double> q_precision, q_recall, q_f1;
  std::vector<int> q_support;
  for (int q = 0; q < schema.num_questions(); ++q) {
    QuestionMetrics qm;
    qm.question_id = schema.question(q).id;
    const int first = schema.first_slot(q);
    const int count = schema.num_answers(q);
    std::vector<int> tp(static_cast<size_t>(count), 0);
    std::vector<int> fp(static_cast<size_t>(count), 0);
    std::vector<int> fn(static_cast<size_t>(count), 0);
    for (size_t i = 0; i < predictions.size(); ++i) {
      if (!masks[i].included[static_cast<size_t>(q)]) continue;
      const int truth = truths[i].labels[static_cast<size_t>(q)];
      if (truth < 0) continue;  // nobody answered; no label exists
      const int pred = predictions[i].discrete[static_cast<size_t>(q)];
      qm.support += 1;
      if (pred == truth) {
        tp[static_cast<size_t>(truth - first)] += 1;
      } else {
        fp[static_cast<size_t>(pred - first)] += 1;
        fn[static_cast<size_t>(truth - first)] += 1;
      }
    }
    double num_p = 0.0, num_r = 0.0, num_f = 0.0;
    for (int a = 0; a < count; ++a) {
      OptionMetrics om;
      om.support = tp[static_cast<size_t>(a)] + fn[static_cast<size_t>(a)];
      const int denom_p = tp[static_cast<size_t>(a)] + fp[static_cast<size_t>(a)];
      const int denom_r = om.support;
      if (denom_p > 0)
        om.precision = static_cast<double>(tp[static_cast<size_t>(a)]) / denom_p;
      else if (om.support > 0)
        report.zero_denominator_hit = true;
      if (denom_r > 0)
        om.recall = static_cast<double>(tp[static_cast<size_t>(a)]) / denom_r;
      if (om.precision + om.recall > 0.0)
        om.f1 = 2.0 * om.precision * om.recall / (om.precision + om.recall);
      else if (om.support > 0)
        report.zero_denominator_hit = true;
      num_p += om.precision * om.support;
      num_r += om.recall * om.support;
      num_f += om.f1 * om.support;
      qm.options.push_back(om);
    }
    if (qm.support > 0) {
      qm.weighted_precision = num_p / qm.support;
      qm.weighted_recall = num_r / qm.support;
      qm.weighted_f1 = num_f / qm.support;
    }
    q_precision.push_back(qm.weighted_precision);
    q_recall.push_back(qm.weighted_recall);
    q_f1.push_back(qm.weighted_f1);
    q_support.push_back(qm.support);
    report.questions.push_back(std::move(qm));
  }
  report.overall_precision = support_weighted_mean(q_precision, q_support);
  report.overall_recall = support_weighted_mean(q_recall, q_support);
  report.overall_f1 = support_weighted_mean(q_f1, q_support);
  return report;
}

EvalResult evaluate_catalog(const NetworkDescription& net, ParameterSet& params,
                            const Catalog& catalog, const EvalOptions& opts) {
  const DecisionTreeSchema& schema = *catalog.schema;
  ModelRuntime runtime(net);
  ImageStore store;

  EvalResult result;
  std::vector<GroundTruth> truths;
  std::vector<QuestionMask> masks;
  result.predictions.reserve(catalog.records.size());
  truths.reserve(catalog.records.size());
  masks.reserve(catalog.records.size());
  for (const GalaxyRecord& rec : catalog.records) {
    PredictionRecord pr = predict(runtime, params, rec, schema, store, opts.passes, opts.seed,
                                  opts.augment_views);
    truths.push_back({rec.id, ground_truth_labels(rec, schema)});
    masks.push_back({rec.id, question_mask(rec, opts.threshold, schema)});
    result.predictions.push_back(std::move(pr));
  }
  result.metrics = compute_metrics(result.predictions, truths, masks, schema);
  result.metrics.model_label = opts.model_label;
  result.metrics.passes = opts.passes;
  result.metrics.threshold = opts.threshold;
  return result;
}

void save_predictions_csv(const std::filesystem::path& path,
                          const std::vector<PredictionRecord>& predictions,
                          const DecisionTreeSchema& schema) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "id,question,option,mean_fraction,discrete\n";
  char line[256];
  for (const PredictionRecord& pr : predictions) {
    for (int q = 0; q < schema.num_questions(); ++q) {
      const Question& question = schema.question(q);
      for (int a = 0; a < schema.num_answers(q); ++a) {
        const int slot = schema.first_slot(q) + a;
        std::snprintf(line, sizeof(line), "%s,%s,%s,%.12g,%d\n", pr.id.c_str(),
                      question.id.c_str(), question.answers[static_cast<size_t>(a)].c_str(),
                      pr.mean_fractions[static_cast<size_t>(slot)],
                      pr.discrete[static_cast<size_t>(q)] == slot ? 1 : 0);
        out << line;
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void save_metrics_csv(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "question,precision,recall,f1,support\n";
  char line[256];
  int64_t total = 0;
  for (const QuestionMetrics& qm : report.questions) {
    std::snprintf(line, sizeof(line), "%s,%.12g,%.12g,%.12g,%d\n", qm.question_id.c_str(),
                  qm.weighted_precision, qm.weighted_recall, qm.weighted_f1, qm.support);
    out << line;
    total += qm.support;
  }
  std::snprintf(line, sizeof(line), "weighted-average,%.12g,%.12g,%.12g,%lld\n",
                report.overall_precision, report.overall_recall, report.overall_f1,
                static_cast<long long>(total));
  out << line;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

MetricsReport load_metrics_csv(const std::filesystem::path& path,
                               const DecisionTreeSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  auto fail = [&path](const std::string& why) -> std::runtime_error {
    return std::runtime_error("metrics csv " + path.string() + ": " + why);
  };
  std::string line;
  if (!std::getline(in, line) || line != "question,precision,recall,f1,support")
    throw fail("missing or unexpected header");
  MetricsReport report;
  bool saw_overall = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<std::string, 5> field;
    size_t start = 0;
    for (int f = 0; f < 5; ++f) {
      const size_t comma = line.find(',', start);
      if ((comma == std::string::npos) != (f == 4)) throw fail("expected 5 fields: " + line);
      field[static_cast<size_t>(f)] = line.substr(start, comma - start);
      start = comma + 1;
    }
    double p = 0, r = 0, f1 = 0;
    long long support = 0;
    try {
      p = std::stod(field[1]);
      r = std::stod(field[2]);
      f1 = std::stod(field[3]);
      support = std::stoll(field[4]);
    } catch (const std::exception&) {
      throw fail("bad numeric field: " + line);
    }
    if (field[0] == "weighted-average") {
      report.overall_precision = p;
      report.overall_recall = r;
      report.overall_f1 = f1;
      saw_overall = true;
      continue;
    }
    if (saw_overall) throw fail("question row after the weighted-average row");
    const int q = static_cast<int>(report.questions.size());
    if (q >= schema.num_questions() || field[0] != schema.question(q).id)
      throw fail("unexpected question row '" + field[0] + "'");
    QuestionMetrics qm;
    qm.question_id = field[0];
    qm.weighted_precision = p;
    qm.weighted_recall = r;
    qm.weighted_f1 = f1;
    qm.support = static_cast<int>(support);
    report.questions.push_back(std::move(qm));
  }
  if (static_cast<int>(report.questions.size()) != schema.num_questions() || !saw_overall)
    throw fail("incomplete table");
  return report;
}

std::string render_metrics_table(const MetricsReport& report) {
  size_t name_width = std::string("Weighted Average").size();
  for (const QuestionMetrics& qm : report.questions)
    name_width = std::max(name_width, qm.question_id.size());

  std::string text;
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s  %9s  %9s  %9s  %9s\n",
                static_cast<int>(name_width), "Question", "Precision", "Recall", "F1-score",
                "Support");
  text += line;
  int64_t total = 0;
  for (const QuestionMetrics& qm : report.questions) {
    if (qm.support == 0) {
      std::snprintf(line, sizeof(line), "%-*s  %9s  %9s  %9s  %9d\n",
                    static_cast<int>(name_width), qm.question_id.c_str(), "-", "-", "-", 0);
    } else {
      std::snprintf(line, sizeof(line), "%-*s  %9.3f  %9.3f  %9.3f  %9d\n",
                    static_cast<int>(name_width), qm.question_id.c_str(), qm.weighted_precision,
                    qm.weighted_recall, qm.weighted_f1, qm.support);
    }
    text += line;
    total += qm.support;
  }
  std::snprintf(line, sizeof(line), "%-*s  %9.3f  %9.3f  %9.3f  %9lld\n",
                static_cast<int>(name_width), "Weighted Average", report.overall_precision,
                report.overall_recall, report.overall_f1, static_cast<long long>(total));
  text += line;
  if (report.zero_denominator_hit)
    text += "note: metrics with a zero denominator are reported as 0.\n";
  return text;
}

void save_metrics_table(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << render_metrics_table(report);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace morphbench
