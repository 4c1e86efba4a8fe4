#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphbench/catalog.hpp"
#include "morphbench/schema.hpp"

namespace morphbench {

// One generative galaxy class: how it renders and how its volunteers vote.
// Questions without a concentration entry fall back to a uniform Dirichlet
// (all ones); in practice those questions sit below rarely-taken branches
// and end up masked out at evaluation.
struct SyntheticClass {
  std::string name;
  double weight = 1.0;  // class-draw weight

  // Rendering: `blobs` Gaussian components of scale `radius` (fraction of
  // the image side), elongated by axis_ratio, separated horizontally by
  // `separation` (fraction of side) when blobs > 1, with `arms`
  // logarithmic spiral arms painted on top.
  int blobs = 1;
  double radius = 0.18;
  double axis_ratio = 1.0;  // minor over major
  double separation = 0.0;
  double brightness = 0.9;
  int arms = 0;
  double radius_jitter = 0.1;      // relative, per galaxy
  double brightness_jitter = 0.1;  // relative
  double position_jitter = 0.02;   // fraction of side

  // question id -> Dirichlet concentrations (one per answer).
  std::map<std::string, std::vector<double>> concentrations;
};

struct SyntheticSpec {
  int count = 100;
  int side = 64;             // stored image side; resized to 300 downstream
  int votes_per_galaxy = 40; // root-question total, >= 3
  double noise = 0.02;       // additive pixel noise sigma
  uint64_t seed = 0;
  std::vector<SyntheticClass> classes;
};

// The built-in four-class set (round smooth, edge-on disk, two-blob merger,
// two-armed spiral) with concentrated vote profiles on every question the
// class's volunteers commonly reach.
SyntheticSpec default_synthetic_spec();

nlohmann::json spec_to_json(const SyntheticSpec& spec);
// Accepts either a full spec or {"preset": "four-class", ...overrides}.
SyntheticSpec spec_from_json(const nlohmann::json& j);
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

struct SynthResult {
  Catalog catalog;
  std::vector<int> class_of;  // generating class index per record (test oracle)
};

// Renders images into out_dir (MB01 files plus catalog.csv) and samples
// votes by walking the decision tree: a question's voters are exactly those
// who picked one of its triggering answers upstream. Deterministic given
// spec.seed.
SynthResult generate_synthetic(const SyntheticSpec& spec, const DecisionTreeSchema& schema,
                               const std::filesystem::path& out_dir);

}  // namespace morphbench
