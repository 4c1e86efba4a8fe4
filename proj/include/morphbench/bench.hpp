#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "morphbench/catalog.hpp"
#include "morphbench/report.hpp"
#include "morphbench/synthetic.hpp"
#include "morphbench/trainer.hpp"

namespace morphbench {

// Everything one `bench all` run needs. A single global seed drives data
// generation, splitting, per-family training and evaluation through named
// hash streams, so one config line reproduces the whole run.
struct BenchConfig {
  bool use_synthetic = true;
  std::string data_dir;  // directory holding catalog.csv when !use_synthetic
  // Generator settings when use_synthetic; its seed field is derived from
  // the global seed at run time.
  SyntheticSpec synth = default_synthetic_spec();

  std::vector<std::string> families{"residual", "dense-connect", "compound-scaled"};
  std::string config_preset = "tiny";  // "tiny" or "full"

  TrainOptions train;  // seed field is ignored; per-family seeds are derived
  int eval_passes = 5;
  double eval_threshold = 0.5;
  double test_fraction = 0.2;
  double val_fraction = 0.2;

  std::string out_dir = "bench-out";
  uint64_t seed = 0;
};

// Canonical JSON round trip (stable key order, suitable for the report's
// configuration echo). from_json applies defaults and rejects unknown keys.
std::string bench_config_to_json(const BenchConfig& config);
BenchConfig bench_config_from_json(const std::string& text);
BenchConfig load_bench_config(const std::filesystem::path& path);

// Held-out test split plus a validation split carved from the remainder;
// both are seeded streams derived from `seed`, so any holder of the seed
// can rebuild the exact partition.
struct DataSplits {
  Catalog train;
  Catalog val;
  Catalog test;
};
DataSplits make_splits(const Catalog& catalog, double test_fraction, double val_fraction,
                       uint64_t seed);

// Per-family training seed stream.
uint64_t family_train_seed(uint64_t bench_seed, const std::string& family);

// Trains one family on the splits and persists its artifacts under
// out_dir/<family>: checkpoint.mbck, trainlog.csv, trainlog.json,
// predictions.csv, metrics.csv, metrics.txt. Exceptions surface as
// ok=false with the message (the benchmark carries on).
FamilyResult run_family(const std::string& family, const BenchConfig& config,
                        const DataSplits& splits);

// The full pipeline: obtain data (generate synthetic into out_dir/data or
// load the configured catalog), split, run every family, then write the
// comparison files (report.txt, timing.txt, training.csv, metric CSVs)
// into out_dir. Failed families are reported, not fatal.
std::vector<FamilyResult> run_benchmark(const BenchConfig& config);

}  // namespace morphbench
