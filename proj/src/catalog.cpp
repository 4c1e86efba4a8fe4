#include "morphbench/catalog.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "morphbench/rng.hpp"

namespace morphbench {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

int parse_vote(const std::string& s, size_t line_no, size_t col) {
  size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != s.size() || s.empty())
    throw std::runtime_error("catalog line " + std::to_string(line_no) + ", column " +
                             std::to_string(col + 1) + ": not an integer vote count: '" + s + "'");
  if (v < 0)
    throw std::runtime_error("catalog line " + std::to_string(line_no) + ", column " +
                             std::to_string(col + 1) + ": negative vote count");
  return v;
}

}  // namespace

void recompute_totals(GalaxyRecord& rec, const DecisionTreeSchema& schema) {
  rec.question_totals.assign(schema.num_questions(), 0);
  for (int q = 0; q < schema.num_questions(); ++q) {
    int total = 0;
    for (int s = schema.first_slot(q); s < schema.first_slot(q) + schema.num_answers(q); ++s)
      total += rec.votes[s];
    rec.question_totals[q] = total;
  }
  rec.root_total = rec.question_totals[schema.root()];
}

Catalog load_catalog(const std::filesystem::path& path, const DecisionTreeSchema& schema,
                     LoadStats* stats, int min_classifications) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open catalog file: " + path.string());
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("catalog file is empty: " + path.string());
  const auto header = split_line(line);
  const size_t expected_cols = 2 + static_cast<size_t>(schema.total_answers());
  if (header.size() != expected_cols || header[0] != "id" || header[1] != "image_path")
    throw std::runtime_error("catalog header mismatch: expected id,image_path plus " +
                             std::to_string(schema.total_answers()) + " vote columns");
  for (int s = 0; s < schema.total_answers(); ++s)
    if (header[2 + s] != schema.answer_id(s))
      throw std::runtime_error("catalog header mismatch at column " + std::to_string(3 + s) +
                               ": expected vote column '" + schema.answer_id(s) + "', found '" +
                               header[2 + s] + "'");

  Catalog catalog;
  catalog.schema = &schema;
  LoadStats st;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != expected_cols)
      throw std::runtime_error("catalog line " + std::to_string(line_no) + ": expected " +
                               std::to_string(expected_cols) + " fields, found " +
                               std::to_string(fields.size()));
    GalaxyRecord rec;
    rec.id = fields[0];
    std::filesystem::path img(fields[1]);
    if (img.is_relative()) img = base / img;
    rec.image_ref = img.string();
    rec.votes.resize(schema.total_answers());
    for (int s = 0; s < schema.total_answers(); ++s)
      rec.votes[s] = parse_vote(fields[2 + s], line_no, 2 + s);
    recompute_totals(rec, schema);

    // A volunteer answers each question at most once.
    for (int q = 0; q < schema.num_questions(); ++q)
      if (rec.question_totals[q] > rec.root_total)
        throw std::runtime_error("catalog line " + std::to_string(line_no) + ": question '" +
                                 schema.question(q).id + "' has more votes (" +
                                 std::to_string(rec.question_totals[q]) +
                                 ") than total classifications (" +
                                 std::to_string(rec.root_total) + ")");

    if (rec.root_total < min_classifications) {
      ++st.dropped;
      continue;
    }
    if (!std::filesystem::exists(rec.image_ref))
      throw std::runtime_error("catalog line " + std::to_string(line_no) +
                               ": missing image file: " + rec.image_ref);
    catalog.records.push_back(std::move(rec));
    ++st.loaded;
  }
  if (stats) *stats = st;
  return catalog;
}

void save_catalog(const Catalog& catalog, const std::filesystem::path& path) {
  const auto& schema = *catalog.schema;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write catalog file: " + path.string());
  out << "id,image_path";
  for (int s = 0; s < schema.total_answers(); ++s) out << ',' << schema.answer_id(s);
  out << '\n';
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  for (const auto& rec : catalog.records) {
    const auto rel = std::filesystem::path(rec.image_ref).lexically_proximate(base);
    out << rec.id << ',' << rel.string();
    for (int v : rec.votes) out << ',' << v;
    out << '\n';
  }
}

std::pair<Catalog, Catalog> split_catalog(const Catalog& catalog, double test_fraction,
                                          uint64_t seed) {
  if (catalog.records.empty()) throw std::runtime_error("cannot split an empty catalog");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::runtime_error("test fraction must be in (0, 1)");

  const size_t n = catalog.records.size();
  const size_t test_n = static_cast<size_t>(std::ceil(static_cast<double>(n) * test_fraction));

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(hash_u64(seed, hash_str(0, "split")));
  shuffle(order, rng);

  Catalog train, test;
  train.schema = test.schema = catalog.schema;
  for (size_t i = 0; i < n; ++i) {
    (i < test_n ? test : train).records.push_back(catalog.records[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

double applicability_fraction(const GalaxyRecord& rec, int question,
                              const DecisionTreeSchema& schema) {
  if (question == schema.root()) return 1.0;
  return static_cast<double>(rec.question_totals[question]) /
         static_cast<double>(rec.root_total);
}

}  // namespace morphbench
