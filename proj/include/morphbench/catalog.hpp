#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "morphbench/schema.hpp"

namespace morphbench {

// One galaxy: image reference plus raw per-answer vote counts. Question
// totals are always recomputed from the votes, never ingested.
struct GalaxyRecord {
  std::string id;
  std::string image_ref;            // resolved path to the image matrix file
  std::vector<int> votes;           // one count per answer slot
  std::vector<int> question_totals; // per question, sum over its slots
  int root_total = 0;               // total classifications (root question total)
};

struct Catalog {
  const DecisionTreeSchema* schema = nullptr;
  std::vector<GalaxyRecord> records;
};

struct LoadStats {
  size_t loaded = 0;   // records kept
  size_t dropped = 0;  // removed by the min-classifications filter
};

// Fills question_totals and root_total from votes.
void recompute_totals(GalaxyRecord& rec, const DecisionTreeSchema& schema);

// Reads a catalog CSV (header: id,image_path,<answer_id>... in schema slot
// order). Image paths are resolved relative to the CSV's directory and must
// exist. Galaxies with fewer than `min_classifications` root votes are
// dropped. Malformed rows and schema mismatches throw with the line number.
Catalog load_catalog(const std::filesystem::path& path, const DecisionTreeSchema& schema,
                     LoadStats* stats = nullptr, int min_classifications = 3);

// Writes records in the same CSV layout; image paths are stored relative to
// the output file's directory when possible.
void save_catalog(const Catalog& catalog, const std::filesystem::path& path);

// Seeded exact partition into (train, test). The test set takes
// ceil(n * test_fraction) records; train gets the rest.
std::pair<Catalog, Catalog> split_catalog(const Catalog& catalog, double test_fraction,
                                          uint64_t seed);

// Fraction of this galaxy's volunteers who were asked `question`
// (question total over root total).
double applicability_fraction(const GalaxyRecord& rec, int question,
                              const DecisionTreeSchema& schema);

}  // namespace morphbench
