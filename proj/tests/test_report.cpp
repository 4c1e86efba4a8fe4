#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "morphbench/report.hpp"
#include "test_support.hpp"

using namespace morphbench;
using testsupport::TempDir;

namespace {

const DecisionTreeSchema& schema() {
  static const DecisionTreeSchema s = build_gzd5_schema();
  return s;
}

// Per-question test-set supports of the published comparison.
const int kSupport[10] = {49917, 15445, 11380, 11380, 11380,
                         32526, 2475, 7499, 7499, 49247};

struct FamilyTable {
  const char* name;
  double precision[10];
  double recall[10];
  double f1[10];
  double overall[3];  // precision, recall, f1
};

// Published three-way comparison (column order as printed there).
const FamilyTable kPublished[3] = {
    {"EfficientNet B0",
     {.877, .954, .891, .697, .684, .870, .794, .685, .664, .849},
     {.876, .955, .887, .715, .694, .867, .820, .698, .676, .881},
     {.876, .955, .889, .693, .669, .867, .787, .687, .654, .851},
     {.838, .848, .836}},
    {"DenseNet121",
     {.880, .957, .893, .698, .690, .876, .826, .695, .695, .851},
     {.881, .957, .888, .710, .696, .875, .825, .707, .674, .882},
     {.881, .956, .890, .677, .674, .875, .794, .696, .668, .855},
     {.843, .851, .840}},
    {"ResNet50",
     {.869, .955, .868, .673, .675, .867, .785, .677, .652, .845},
     {.863, .955, .875, .696, .691, .864, .816, .690, .664, .880},
     {.865, .955, .869, .662, .672, .865, .784, .678, .642, .848},
     {.831, .841, .829}},
};

// Expected mark holders per row, bitmask over family columns {1, 2, 4}.
struct MarkRow {
  int best;
  int worst;
};
const MarkRow kPrecisionMarks[11] = {{2, 4}, {2, 1}, {2, 4}, {2, 4}, {2, 4}, {2, 4},
                                     {2, 4}, {2, 4}, {2, 4}, {2, 4}, {2, 4}};
const MarkRow kRecallMarks[11] = {{2, 4}, {2, 5}, {2, 4}, {1, 4}, {2, 4}, {2, 4},
                                  {2, 4}, {2, 4}, {1, 4}, {2, 4}, {2, 4}};
const MarkRow kF1Marks[11] = {{2, 4}, {2, 5}, {2, 4}, {1, 4}, {2, 1}, {2, 4},
                              {2, 4}, {2, 4}, {2, 4}, {2, 4}, {2, 4}};

std::vector<FamilyResult> published_results() {
  std::vector<FamilyResult> out;
  for (const FamilyTable& fam : kPublished) {
    FamilyResult fr;
    fr.family = fam.name;
    fr.ok = true;
    fr.log.epochs_run = 10;
    fr.log.total_hours = 1.0;
    fr.log.stop_reason = "early-stop";
    fr.log.best_epoch = 5;
    fr.log.best_val_loss = 2.0;
    for (int q = 0; q < 10; ++q) {
      QuestionMetrics qm;
      qm.question_id = schema().question(q).id;
      qm.weighted_precision = fam.precision[q];
      qm.weighted_recall = fam.recall[q];
      qm.weighted_f1 = fam.f1[q];
      qm.support = kSupport[q];
      fr.metrics.questions.push_back(std::move(qm));
    }
    fr.metrics.overall_precision = fam.overall[0];
    fr.metrics.overall_recall = fam.overall[1];
    fr.metrics.overall_f1 = fam.overall[2];
    out.push_back(std::move(fr));
  }
  return out;
}

std::string cell(double v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string find_row(const std::string& table, const std::string& name) {
  std::istringstream in(table);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(name, 0) == 0) return line;
  return {};
}

void check_marks(const std::string& table, const std::string& row_name, const double values[3],
                 const MarkRow& marks) {
  const std::string line = find_row(table, row_name);
  CAPTURE(row_name);
  CAPTURE(line);
  REQUIRE(!line.empty());
  for (int f = 0; f < 3; ++f) {
    std::string expect = cell(values[f]);
    if (marks.best & (1 << f))
      expect = "*" + expect + "*";
    else if (marks.worst & (1 << f))
      expect = "_" + expect + "_";
    CAPTURE(expect);
    CHECK(line.find(expect) != std::string::npos);
  }
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("metric tables mark the published comparison correctly") {
  const std::vector<FamilyResult> results = published_results();

  SUBCASE("precision") {
    const std::string t = render_metric_table(MetricKind::precision, results);
    for (int q = 0; q < 10; ++q) {
      const double v[3] = {kPublished[0].precision[q], kPublished[1].precision[q],
                           kPublished[2].precision[q]};
      check_marks(t, schema().question(q).id, v, kPrecisionMarks[q]);
    }
    const double ov[3] = {kPublished[0].overall[0], kPublished[1].overall[0],
                          kPublished[2].overall[0]};
    check_marks(t, "Weighted Average", ov, kPrecisionMarks[10]);
  }
  SUBCASE("recall") {
    const std::string t = render_metric_table(MetricKind::recall, results);
    for (int q = 0; q < 10; ++q) {
      const double v[3] = {kPublished[0].recall[q], kPublished[1].recall[q],
                           kPublished[2].recall[q]};
      check_marks(t, schema().question(q).id, v, kRecallMarks[q]);
    }
    const double ov[3] = {kPublished[0].overall[1], kPublished[1].overall[1],
                          kPublished[2].overall[1]};
    check_marks(t, "Weighted Average", ov, kRecallMarks[10]);
  }
  SUBCASE("f1") {
    const std::string t = render_metric_table(MetricKind::f1, results);
    for (int q = 0; q < 10; ++q) {
      const double v[3] = {kPublished[0].f1[q], kPublished[1].f1[q], kPublished[2].f1[q]};
      check_marks(t, schema().question(q).id, v, kF1Marks[q]);
    }
    const double ov[3] = {kPublished[0].overall[2], kPublished[1].overall[2],
                          kPublished[2].overall[2]};
    check_marks(t, "Weighted Average", ov, kF1Marks[10]);
  }
  SUBCASE("every family name appears as a column header") {
    const std::string t = render_metric_table(MetricKind::precision, results);
    for (const FamilyTable& fam : kPublished) CHECK(t.find(fam.name) != std::string::npos);
  }
}

TEST_CASE("rounding decides the marks, not the raw doubles") {
  // 0.8801 and 0.8804 both print 0.880: a printed tie stars them both.
  std::vector<FamilyResult> results = published_results();
  results.resize(2);
  results[0].metrics.questions[0].weighted_precision = 0.8801;
  results[1].metrics.questions[0].weighted_precision = 0.8804;
  const std::string t = render_metric_table(MetricKind::precision, results);
  const std::string line = find_row(t, "smooth-or-featured");
  size_t first = line.find("*0.880*");
  REQUIRE(first != std::string::npos);
  CHECK(line.find("*0.880*", first + 1) != std::string::npos);
  CHECK(line.find("_") == std::string::npos);  // a two-way tie has no worst
}

TEST_CASE("a single family is best without being worst") {
  std::vector<FamilyResult> results = {published_results()[0]};
  const std::string t = render_metric_table(MetricKind::f1, results);
  const std::string line = find_row(t, "smooth-or-featured");
  CHECK(line.find("*0.876*") != std::string::npos);
  CHECK(line.find("_0.876_") == std::string::npos);
}

TEST_CASE("support-0 rows and failed families render as dashes") {
  std::vector<FamilyResult> results = published_results();
  results[2].ok = false;
  results[2].error = "training aborted: non-finite loss";
  for (auto& qm : results[0].metrics.questions)
    if (qm.question_id == "edge-on-bulge") qm.support = 0;

  const std::string t = render_metric_table(MetricKind::recall, results);
  const std::string row = find_row(t, "edge-on-bulge");
  REQUIRE(!row.empty());
  // First family's cell is a dash and takes no part in the competition.
  CHECK(row.find("-") != std::string::npos);
  CHECK(row.find("0.820") == std::string::npos);
  CHECK(row.find("*0.825*") != std::string::npos);  // only one live value left
  // The failed family column is dashed on every row.
  const std::string smooth = find_row(t, "smooth-or-featured");
  CHECK(smooth.find("0.863") == std::string::npos);

  const std::string report = render_report(results, "{}\n");
  CHECK(report.find("Failures") != std::string::npos);
  CHECK(report.find("non-finite loss") != std::string::npos);
  CHECK(report.find("ResNet50:") != std::string::npos);
}

TEST_CASE("training table lists run shape, not wall time") {
  std::vector<FamilyResult> results = published_results();
  results[1].log.epochs_run = 37;
  results[1].log.stop_reason = "max-epochs";
  results[1].log.best_epoch = 31;
  results[1].log.best_val_loss = 1.875;
  const std::string t = render_training_table(results);
  const std::string row = find_row(t, "DenseNet121");
  CHECK(row.find("37") != std::string::npos);
  CHECK(row.find("max-epochs") != std::string::npos);
  CHECK(row.find("31") != std::string::npos);
  CHECK(row.find("1.875") != std::string::npos);
  CHECK(t.find("hours") == std::string::npos);

  const std::string timing = render_timing(results);
  CHECK(timing.find("Hours") != std::string::npos);
  CHECK(timing.find("1.000") != std::string::npos);
}

TEST_CASE("the full report embeds the configuration echo and the mark legend") {
  const std::vector<FamilyResult> results = published_results();
  const std::string config = "{\n  \"seed\": 7\n}\n";
  const std::string report = render_report(results, config);
  CHECK(report.find("Galaxy morphology benchmark comparison") != std::string::npos);
  CHECK(report.find("\"seed\": 7") != std::string::npos);
  CHECK(report.find("Precision") != std::string::npos);
  CHECK(report.find("Recall") != std::string::npos);
  CHECK(report.find("F1-score") != std::string::npos);
  CHECK(report.find("Best value per row is marked") != std::string::npos);
  // Identical inputs give identical bytes.
  CHECK(report == render_report(results, config));
}

TEST_CASE("report files are written and reproducible") {
  const std::vector<FamilyResult> results = published_results();
  TempDir d1("report-out1"), d2("report-out2");
  save_report_files(results, "{}\n", d1.path());
  save_report_files(results, "{}\n", d2.path());
  for (const char* name : {"report.txt", "timing.txt", "training.csv", "metrics_precision.csv",
                           "metrics_recall.csv", "metrics_f1.csv"}) {
    CAPTURE(name);
    CHECK(std::filesystem::exists(d1.path() / name));
    if (std::string(name) != "timing.txt")
      CHECK(file_bytes(d1.path() / name) == file_bytes(d2.path() / name));
  }
  const std::string csv = file_bytes(d1.path() / "metrics_f1.csv");
  CHECK(csv.rfind("question,", 0) == 0);
  CHECK(csv.find("EfficientNet B0") != std::string::npos);
  CHECK(csv.find("weighted-average") != std::string::npos);
}

TEST_CASE("family results rehydrate from a benchmark directory") {
  TempDir dir("report-load");
  const std::string family = "residual";
  std::filesystem::create_directories(dir.path() / family);

  MetricsReport rep;
  for (int q = 0; q < 10; ++q) {
    QuestionMetrics qm;
    qm.question_id = schema().question(q).id;
    qm.weighted_precision = 0.5 + 0.01 * q;
    qm.weighted_recall = 0.6;
    qm.weighted_f1 = 0.55;
    qm.support = 100 + q;
    rep.questions.push_back(std::move(qm));
  }
  std::vector<double> p, r, f;
  std::vector<int> s;
  for (const auto& qm : rep.questions) {
    p.push_back(qm.weighted_precision);
    r.push_back(qm.weighted_recall);
    f.push_back(qm.weighted_f1);
    s.push_back(qm.support);
  }
  rep.overall_precision = support_weighted_mean(p, s);
  rep.overall_recall = support_weighted_mean(r, s);
  rep.overall_f1 = support_weighted_mean(f, s);
  save_metrics_csv(dir.path() / family / "metrics.csv", rep);

  TrainLog log;
  log.epochs = {{1, 3.0, 2.9, 1.0}};
  log.epochs_run = 1;
  log.total_hours = 0.25;
  log.stop_reason = "max-epochs";
  log.best_epoch = 1;
  log.best_val_loss = 2.9;
  save_train_log(log, dir.path() / family / "trainlog.csv", dir.path() / family / "trainlog.json");

  const FamilyResult fr = load_family_result(dir.path(), family, schema());
  CHECK(fr.ok);
  CHECK(fr.family == family);
  CHECK(fr.log.stop_reason == "max-epochs");
  CHECK(fr.log.total_hours == doctest::Approx(0.25));
  CHECK(fr.metrics.overall_precision == doctest::Approx(rep.overall_precision).epsilon(1e-10));
  CHECK(fr.metrics.questions[3].support == 103);

  const FamilyResult missing = load_family_result(dir.path(), "dense-connect", schema());
  CHECK_FALSE(missing.ok);
  CHECK(!missing.error.empty());
}
