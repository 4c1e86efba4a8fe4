#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include "morphbench/catalog.hpp"
#include "morphbench/schema.hpp"
#include "test_support.hpp"

using namespace morphbench;
using testsupport::TempDir;
using testsupport::make_record;

namespace {

const DecisionTreeSchema& schema() {
  static const DecisionTreeSchema s = build_gzd5_schema();
  return s;
}

// 34-slot vote vector with the given (slot, count) entries.
std::vector<int> votes_at(const std::map<int, int>& entries) {
  std::vector<int> v(34, 0);
  for (const auto& [slot, count] : entries) v[static_cast<size_t>(slot)] = count;
  return v;
}

void touch(const std::filesystem::path& p) { std::ofstream(p).put('\n'); }

}  // namespace

TEST_CASE("totals are recomputed from votes") {
  // Root 30/8/2, merging 3/0/0/35 (intentionally more merging votes than the
  // written question_totals would claim; recompute must win).
  GalaxyRecord rec = make_record("g1", votes_at({{0, 30}, {1, 8}, {2, 2}, {30, 3}, {33, 35}}),
                                 schema());
  CHECK(rec.root_total == 40);
  CHECK(rec.question_totals[0] == 40);
  CHECK(rec.question_totals[9] == 38);
  CHECK(rec.question_totals[3] == 0);
}

TEST_CASE("applicability fractions") {
  const GalaxyRecord rec = make_record(
      "g1", votes_at({{0, 30}, {1, 8}, {2, 2}, {30, 3}, {33, 35}, {7, 10}}), schema());
  CHECK(applicability_fraction(rec, schema().root(), schema()) == doctest::Approx(1.0));
  CHECK(applicability_fraction(rec, schema().question_index("merging"), schema()) ==
        doctest::Approx(0.95));
  CHECK(applicability_fraction(rec, schema().question_index("bar"), schema()) ==
        doctest::Approx(0.25));
}

TEST_CASE("catalog csv round trip preserves records") {
  TempDir dir("catalog-roundtrip");
  Catalog catalog;
  catalog.schema = &schema();
  for (int i = 0; i < 3; ++i) {
    const std::string image = "img" + std::to_string(i) + ".mb";
    touch(dir.path() / image);
    catalog.records.push_back(make_record(
        "gal-" + std::to_string(i),
        votes_at({{0, 10 + i}, {1, 5}, {2, 1}, {30, 2}, {33, 12 + i}}), schema(),
        (dir.path() / image).string()));
  }
  const auto csv = dir.path() / "catalog.csv";
  save_catalog(catalog, csv);

  LoadStats stats;
  const Catalog loaded = load_catalog(csv, schema(), &stats);
  CHECK(stats.loaded == 3);
  CHECK(stats.dropped == 0);
  REQUIRE(loaded.records.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(loaded.records[i].id == catalog.records[i].id);
    CHECK(loaded.records[i].votes == catalog.records[i].votes);
    CHECK(loaded.records[i].question_totals == catalog.records[i].question_totals);
    CHECK(loaded.records[i].root_total == catalog.records[i].root_total);
    CHECK(std::filesystem::exists(loaded.records[i].image_ref));
  }
}

TEST_CASE("loader drops under-classified galaxies, boundary inclusive") {
  TempDir dir("catalog-filter");
  touch(dir.path() / "a.mb");
  touch(dir.path() / "b.mb");
  Catalog catalog;
  catalog.schema = &schema();
  catalog.records.push_back(
      make_record("kept", votes_at({{0, 2}, {1, 1}}), schema(), (dir.path() / "a.mb").string()));
  catalog.records.push_back(
      make_record("dropped", votes_at({{0, 2}}), schema(), (dir.path() / "b.mb").string()));
  const auto csv = dir.path() / "catalog.csv";
  save_catalog(catalog, csv);

  LoadStats stats;
  const Catalog loaded = load_catalog(csv, schema(), &stats);
  CHECK(stats.loaded == 1);
  CHECK(stats.dropped == 1);
  REQUIRE(loaded.records.size() == 1);
  CHECK(loaded.records[0].id == "kept");
  CHECK(loaded.records[0].root_total == 3);
}

TEST_CASE("loader reports malformed input with line numbers") {
  TempDir dir("catalog-errors");
  std::string header = "id,image_path";
  for (int s = 0; s < schema().total_answers(); ++s) header += "," + schema().answer_id(s);

  SUBCASE("bad header") {
    std::ofstream(dir.path() / "bad.csv") << "id,path,votes\n";
    CHECK_THROWS_WITH_AS(load_catalog(dir.path() / "bad.csv", schema()),
                         doctest::Contains("header mismatch"), std::runtime_error);
  }
  SUBCASE("wrong field count") {
    std::ofstream(dir.path() / "short.csv") << header << "\ng1,img.mb,1,2\n";
    CHECK_THROWS_WITH_AS(load_catalog(dir.path() / "short.csv", schema()),
                         doctest::Contains("line 2"), std::runtime_error);
  }
  SUBCASE("negative vote") {
    std::string row = "g1,img.mb";
    for (int s = 0; s < schema().total_answers(); ++s) row += (s == 0 ? ",-4" : ",0");
    std::ofstream(dir.path() / "neg.csv") << header << "\n" << row << "\n";
    CHECK_THROWS_WITH_AS(load_catalog(dir.path() / "neg.csv", schema()),
                         doctest::Contains("line 2"), std::runtime_error);
  }
  SUBCASE("child votes exceeding classifications") {
    // 5 root votes but 9 on merging: impossible, volunteers answer once.
    std::vector<int> v = votes_at({{0, 5}, {33, 9}});
    std::string row = "g1,img.mb";
    for (int x : v) row += "," + std::to_string(x);
    std::ofstream(dir.path() / "over.csv") << header << "\n" << row << "\n";
    CHECK_THROWS_WITH_AS(load_catalog(dir.path() / "over.csv", schema()),
                         doctest::Contains("more votes"), std::runtime_error);
  }
  SUBCASE("missing image file") {
    std::vector<int> v = votes_at({{0, 5}});
    std::string row = "g1,nowhere.mb";
    for (int x : v) row += "," + std::to_string(x);
    std::ofstream(dir.path() / "ghost.csv") << header << "\n" << row << "\n";
    CHECK_THROWS_WITH_AS(load_catalog(dir.path() / "ghost.csv", schema()),
                         doctest::Contains("missing image"), std::runtime_error);
  }
}

TEST_CASE("split sizes follow the ceil rule") {
  auto catalog_of = [](size_t n) {
    Catalog c;
    c.records.resize(n);
    return c;
  };
  SUBCASE("10 records, fraction 0.2") {
    const auto [train, test] = split_catalog(catalog_of(10), 0.2, 1);
    CHECK(train.records.size() == 8);
    CHECK(test.records.size() == 2);
  }
  SUBCASE("5 records, fraction 0.2") {
    const auto [train, test] = split_catalog(catalog_of(5), 0.2, 1);
    CHECK(train.records.size() == 4);
    CHECK(test.records.size() == 1);
  }
  SUBCASE("survey-scale count") {
    const auto [train, test] = split_catalog(catalog_of(249581), 0.2, 9);
    CHECK(train.records.size() == 199664);
    CHECK(test.records.size() == 49917);
  }
}

TEST_CASE("split is a deterministic exact partition") {
  Catalog catalog;
  catalog.schema = &schema();
  for (int i = 0; i < 23; ++i)
    catalog.records.push_back(make_record("g" + std::to_string(i), votes_at({{0, 5}}), schema()));

  const auto [train1, test1] = split_catalog(catalog, 0.3, 42);
  const auto [train2, test2] = split_catalog(catalog, 0.3, 42);
  auto ids = [](const Catalog& c) {
    std::vector<std::string> v;
    for (const auto& r : c.records) v.push_back(r.id);
    return v;
  };
  CHECK(ids(train1) == ids(train2));
  CHECK(ids(test1) == ids(test2));

  std::set<std::string> all;
  for (const auto& r : train1.records) CHECK(all.insert(r.id).second);
  for (const auto& r : test1.records) CHECK(all.insert(r.id).second);
  CHECK(all.size() == 23);

  const auto [train3, test3] = split_catalog(catalog, 0.3, 43);
  CHECK(ids(test3) != ids(test1));  // a different seed shuffles differently
}

TEST_CASE("split rejects bad input") {
  Catalog empty;
  CHECK_THROWS_AS(split_catalog(empty, 0.2, 1), std::runtime_error);
  Catalog one;
  one.records.resize(1);
  CHECK_THROWS_AS(split_catalog(one, 0.0, 1), std::runtime_error);
  CHECK_THROWS_AS(split_catalog(one, 1.0, 1), std::runtime_error);
}
