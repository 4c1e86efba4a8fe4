#include "morphbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>

namespace morphbench {

namespace {

const char* metric_title(MetricKind kind) {
  switch (kind) {
    case MetricKind::precision: return "Precision";
    case MetricKind::recall: return "Recall";
    case MetricKind::f1: return "F1-score";
  }
  return "?";
}

double question_value(const QuestionMetrics& qm, MetricKind kind) {
  switch (kind) {
    case MetricKind::precision: return qm.weighted_precision;
    case MetricKind::recall: return qm.weighted_recall;
    case MetricKind::f1: return qm.weighted_f1;
  }
  return 0.0;
}

double overall_value(const MetricsReport& report, MetricKind kind) {
  switch (kind) {
    case MetricKind::precision: return report.overall_precision;
    case MetricKind::recall: return report.overall_recall;
    case MetricKind::f1: return report.overall_f1;
  }
  return 0.0;
}

// Values compete at the printed precision so the marks never contradict the
// rendered digits.
long long rounded(double v) { return std::llround(v * 1000.0); }

std::string format_cell(std::optional<double> value, long long best, long long worst,
                        bool mark_worst) {
  if (!value) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", *value);
  const long long r = rounded(*value);
  if (r == best) return std::string("*") + buf + "*";
  if (mark_worst && r == worst) return std::string("_") + buf + "_";
  return buf;
}

struct TableRow {
  std::string name;
  std::vector<std::string> cells;
};

// Renders rows with a left-aligned name column and right-aligned value
// columns, two spaces apart, matching the single-model metric table.
std::string layout_table(const std::vector<std::string>& headers,
                         const std::vector<TableRow>& rows) {
  std::vector<size_t> width(headers.size());
  for (size_t c = 0; c < headers.size(); ++c) width[c] = headers[c].size();
  for (const TableRow& row : rows) {
    width[0] = std::max(width[0], row.name.size());
    for (size_t c = 0; c + 1 < headers.size(); ++c)
      width[c + 1] = std::max(width[c + 1], row.cells[c].size());
  }
  std::string text;
  auto emit = [&text, &width](const std::string& name, const std::vector<std::string>& cells) {
    text += name;
    text.append(width[0] - name.size(), ' ');
    for (size_t c = 0; c < cells.size(); ++c) {
      text += "  ";
      text.append(width[c + 1] - cells[c].size(), ' ');
      text += cells[c];
    }
    text += '\n';
  };
  std::vector<std::string> header_cells(headers.begin() + 1, headers.end());
  emit(headers[0], header_cells);
  for (const TableRow& row : rows) emit(row.name, row.cells);
  return text;
}

std::vector<std::string> question_names(const std::vector<FamilyResult>& results) {
  for (const FamilyResult& fr : results)
    if (!fr.metrics.questions.empty()) {
      std::vector<std::string> names;
      for (const QuestionMetrics& qm : fr.metrics.questions) names.push_back(qm.question_id);
      return names;
    }
  // Every family failed: fall back to the schema so the table keeps its rows.
  const DecisionTreeSchema schema = build_gzd5_schema();
  std::vector<std::string> names;
  for (int q = 0; q < schema.num_questions(); ++q) names.push_back(schema.question(q).id);
  return names;
}

TableRow make_row(const std::string& name, const std::vector<std::optional<double>>& values) {
  long long best = 0, worst = 0;
  bool any = false;
  for (const auto& v : values) {
    if (!v) continue;
    const long long r = rounded(*v);
    if (!any) {
      best = worst = r;
      any = true;
    } else {
      best = std::max(best, r);
      worst = std::min(worst, r);
    }
  }
  TableRow row{name, {}};
  for (const auto& v : values) row.cells.push_back(format_cell(v, best, worst, worst < best));
  return row;
}

std::string underline(const std::string& title, char mark) {
  return title + "\n" + std::string(title.size(), mark) + "\n";
}

int64_t total_support(const MetricsReport& report) {
  int64_t total = 0;
  for (const QuestionMetrics& qm : report.questions) total += qm.support;
  return total;
}

}  // namespace

std::string render_metric_table(MetricKind kind, const std::vector<FamilyResult>& results) {
  if (results.empty()) throw std::invalid_argument("render_metric_table: no results");
  const std::vector<std::string> names = question_names(results);

  std::vector<std::string> headers{"Question"};
  for (const FamilyResult& fr : results) headers.push_back(fr.family);

  std::vector<TableRow> rows;
  for (size_t q = 0; q < names.size(); ++q) {
    std::vector<std::optional<double>> values;
    for (const FamilyResult& fr : results) {
      const bool have = fr.ok && q < fr.metrics.questions.size() &&
                        fr.metrics.questions[q].support > 0;
      values.push_back(have ? std::optional<double>(question_value(fr.metrics.questions[q], kind))
                            : std::nullopt);
    }
    rows.push_back(make_row(names[q], values));
  }
  std::vector<std::optional<double>> overall;
  for (const FamilyResult& fr : results) {
    const bool have = fr.ok && total_support(fr.metrics) > 0;
    overall.push_back(have ? std::optional<double>(overall_value(fr.metrics, kind))
                           : std::nullopt);
  }
  rows.push_back(make_row("Weighted Average", overall));
  return layout_table(headers, rows);
}

std::string render_training_table(const std::vector<FamilyResult>& results) {
  std::vector<std::string> headers{"Family", "Epochs", "Stop reason", "Best epoch",
                                   "Best val loss"};
  std::vector<TableRow> rows;
  char buf[64];
  for (const FamilyResult& fr : results) {
    TableRow row{fr.family, {}};
    if (fr.ok) {
      std::snprintf(buf, sizeof(buf), "%d", fr.log.epochs_run);
      row.cells.push_back(buf);
      row.cells.push_back(fr.log.stop_reason);
      std::snprintf(buf, sizeof(buf), "%d", fr.log.best_epoch);
      row.cells.push_back(buf);
      std::snprintf(buf, sizeof(buf), "%.6g", fr.log.best_val_loss);
      row.cells.push_back(buf);
    } else {
      row.cells = {"-", "-", "-", "-"};
    }
    rows.push_back(std::move(row));
  }
  return layout_table(headers, rows);
}

std::string render_timing(const std::vector<FamilyResult>& results) {
  std::vector<std::string> headers{"Family", "Epochs", "Hours"};
  std::vector<TableRow> rows;
  char buf[64];
  for (const FamilyResult& fr : results) {
    TableRow row{fr.family, {}};
    if (fr.ok) {
      std::snprintf(buf, sizeof(buf), "%d", fr.log.epochs_run);
      row.cells.push_back(buf);
      std::snprintf(buf, sizeof(buf), "%.3f", fr.log.total_hours);
      row.cells.push_back(buf);
    } else {
      row.cells = {"-", "-"};
    }
    rows.push_back(std::move(row));
  }
  return underline("Training time", '-') + layout_table(headers, rows);
}

std::string render_report(const std::vector<FamilyResult>& results,
                          const std::string& config_json) {
  if (results.empty()) throw std::invalid_argument("render_report: no results");
  std::string text = underline("Galaxy morphology benchmark comparison", '=');
  text += '\n';

  text += underline("Configuration", '-');
  text += config_json;
  if (config_json.empty() || config_json.back() != '\n') text += '\n';
  text += '\n';

  text += underline("Training", '-');
  text += render_training_table(results);
  text += "(measured wall-clock hours are written to timing.txt)\n\n";

  for (const MetricKind kind :
       {MetricKind::precision, MetricKind::recall, MetricKind::f1}) {
    text += underline(metric_title(kind), '-');
    text += render_metric_table(kind, results);
    text += '\n';
  }
  text += "Best value per row is marked *v*, worst _v_; ties mark every holder.\n";

  bool zero_denominator = false;
  bool any_failed = false;
  for (const FamilyResult& fr : results) {
    zero_denominator = zero_denominator || (fr.ok && fr.metrics.zero_denominator_hit);
    any_failed = any_failed || !fr.ok;
  }
  if (zero_denominator) text += "note: metrics with a zero denominator are reported as 0.\n";
  if (any_failed) {
    text += '\n';
    text += underline("Failures", '-');
    for (const FamilyResult& fr : results)
      if (!fr.ok) text += fr.family + ": " + fr.error + "\n";
  }
  return text;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_metric_csv(const std::filesystem::path& path, MetricKind kind,
                      const std::vector<FamilyResult>& results) {
  std::string text = "question";
  for (const FamilyResult& fr : results) text += "," + fr.family;
  text += '\n';
  const std::vector<std::string> names = question_names(results);
  char buf[64];
  for (size_t q = 0; q < names.size(); ++q) {
    text += names[q];
    for (const FamilyResult& fr : results) {
      text += ',';
      if (fr.ok && q < fr.metrics.questions.size() && fr.metrics.questions[q].support > 0) {
        std::snprintf(buf, sizeof(buf), "%.12g", question_value(fr.metrics.questions[q], kind));
        text += buf;
      }
    }
    text += '\n';
  }
  text += "weighted-average";
  for (const FamilyResult& fr : results) {
    text += ',';
    if (fr.ok && total_support(fr.metrics) > 0) {
      std::snprintf(buf, sizeof(buf), "%.12g", overall_value(fr.metrics, kind));
      text += buf;
    }
  }
  text += '\n';
  write_text(path, text);
}

}  // namespace

void save_report_files(const std::vector<FamilyResult>& results, const std::string& config_json,
                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "report.txt", render_report(results, config_json));
  write_text(out_dir / "timing.txt", render_timing(results));

  std::string training = "family,epochs,stop_reason,best_epoch,best_val_loss\n";
  char buf[128];
  for (const FamilyResult& fr : results) {
    if (!fr.ok) continue;
    std::snprintf(buf, sizeof(buf), "%s,%d,%s,%d,%.12g\n", fr.family.c_str(), fr.log.epochs_run,
                  fr.log.stop_reason.c_str(), fr.log.best_epoch, fr.log.best_val_loss);
    training += buf;
  }
  write_text(out_dir / "training.csv", training);

  write_metric_csv(out_dir / "metrics_precision.csv", MetricKind::precision, results);
  write_metric_csv(out_dir / "metrics_recall.csv", MetricKind::recall, results);
  write_metric_csv(out_dir / "metrics_f1.csv", MetricKind::f1, results);
}

FamilyResult load_family_result(const std::filesystem::path& dir, const std::string& family,
                                const DecisionTreeSchema& schema) {
  FamilyResult fr;
  fr.family = family;
  try {
    fr.metrics = load_metrics_csv(dir / family / "metrics.csv", schema);
    fr.log = load_train_log_json(dir / family / "trainlog.json");
    fr.ok = true;
  } catch (const std::exception& e) {
    fr.ok = false;
    fr.error = e.what();
  }
  return fr;
}

}  // namespace morphbench
